"""Per-model correctness on a small set of hard examples.

The set file is ``id<TAB>text<TAB>entity<TAB>gold`` with gold in {-1, 0, 1};
a gold of ``?`` marks a placeholder row whose sentence is unknown.  Such
rows still need a prediction from every model but are scored only when a
gold override is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from sentipipe.corpus import DatasetError, Label, read_tsv_rows, unescape_field

SET_HEADER = ("id", "text", "entity", "gold")
PRED_HEADER = ("id", "label")
MATRIX_HEADER_PREFIX = ("id", "gold")


@dataclass(frozen=True)
class DifficultItem:
    id: str
    text: str
    entity: str | None
    gold: int | None  # polarity; None for a placeholder


def _polarity(raw: str, where: str) -> int:
    try:
        return Label.parse(raw).polarity
    except DatasetError:
        raise DatasetError(f"{where}: label must be -1, 0 or 1 (or a class name), got {raw!r}") from None


def load_difficult_set(path: str | Path) -> list[DifficultItem]:
    items = []
    seen = set()
    for lineno, (sid, text, entity, gold) in read_tsv_rows(path, SET_HEADER):
        sid = sid.strip()
        if sid in seen:
            raise DatasetError(f"{path}:{lineno}: duplicate id {sid!r}")
        seen.add(sid)
        g = None if gold.strip() == "?" else _polarity(gold, f"{path}:{lineno}")
        items.append(DifficultItem(sid, unescape_field(text), unescape_field(entity).strip() or None, g))
    if not items:
        raise DatasetError(f"{path}: no examples")
    return items


def load_predictions(path: str | Path) -> dict[str, int]:
    """``id<TAB>label`` file -> polarity per id."""
    out = {}
    for lineno, (sid, label) in read_tsv_rows(path, PRED_HEADER):
        sid = sid.strip()
        if sid in out:
            raise DatasetError(f"{path}:{lineno}: duplicate id {sid!r}")
        out[sid] = _polarity(label, f"{path}:{lineno}")
    return out


def write_predictions(path: str | Path, ids: Sequence[str], labels: Sequence[int]) -> None:
    """Write class indices as ``id<TAB>label`` with polarity labels."""
    lines = ["id\tlabel"] + [f"{i}\t{Label(int(y)).polarity}" for i, y in zip(ids, labels)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_prediction_matrix(path: str | Path) -> tuple[dict[str, int | None], dict[str, dict[str, int]]]:
    """Wide file ``id<TAB>gold<TAB>model1<TAB>...``: gold per id and one prediction column per model."""
    lines = [l for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty file")
    header = lines[0].split("\t")
    if tuple(header[:2]) != MATRIX_HEADER_PREFIX or len(header) < 3:
        raise DatasetError(f"{path}:1: expected id<TAB>gold<TAB><model>...")
    models = header[2:]
    gold: dict[str, int | None] = {}
    preds: dict[str, dict[str, int]] = {m: {} for m in models}
    for lineno, line in enumerate(lines[1:], 2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DatasetError(f"{path}:{lineno}: expected {len(header)} columns, got {len(fields)}")
        sid = fields[0]
        if sid in gold:
            raise DatasetError(f"{path}:{lineno}: duplicate id {sid!r}")
        gold[sid] = None if fields[1] == "?" else _polarity(fields[1], f"{path}:{lineno}")
        for m, v in zip(models, fields[2:]):
            preds[m][sid] = _polarity(v, f"{path}:{lineno}")
    return gold, preds


@dataclass
class DifficultReport:
    ids: list[str]
    gold: list[int | None]
    models: list[str]
    predictions: dict[str, list[int]]

    def correct(self, model: str) -> list[bool | None]:
        return [None if g is None else p == g for g, p in zip(self.gold, self.predictions[model])]

    def n_correct(self, model: str) -> int:
        return sum(1 for c in self.correct(model) if c)

    @property
    def n_scored(self) -> int:
        return sum(g is not None for g in self.gold)

    def share(self, model: str) -> float:
        """Correct answers over all scored rows, i.e. the mean of the correctness column."""
        flags = [c for c in self.correct(model) if c is not None]
        return sum(flags) / len(flags) if flags else 0.0

    def to_text(self) -> str:
        width = max(6, *(len(m) + 1 for m in self.models))
        head = f"{'id':<10}{'gold':>5}" + "".join(f"{m:>{width}}" for m in self.models)
        rows = [head]
        for i, (sid, g) in enumerate(zip(self.ids, self.gold)):
            cells = []
            for m in self.models:
                p = self.predictions[m][i]
                mark = "*" if g is not None and p == g else ""
                cells.append(f"{str(p) + mark:>{width}}")
            rows.append(f"{sid:<10}{'?' if g is None else g:>5}" + "".join(cells))
        rows.append(f"{'share':<10}{'':>5}" + "".join(f"{self.share(m):>{width}.2f}" for m in self.models))
        return "\n".join(rows) + "\n"

    def to_tsv(self) -> str:
        rows = ["id\tgold\t" + "\t".join(self.models)]
        for i, (sid, g) in enumerate(zip(self.ids, self.gold)):
            cells = [str(self.predictions[m][i]) for m in self.models]
            rows.append(f"{sid}\t{'?' if g is None else g}\t" + "\t".join(cells))
        rows.append("share\t\t" + "\t".join(repr(self.share(m)) for m in self.models))
        return "\n".join(rows) + "\n"


def difficult_report(
    ids: Sequence[str],
    gold: Mapping[str, int | None],
    predictions: Mapping[str, Mapping[str, int]],
) -> DifficultReport:
    """Build the example x model table; every model must cover every id."""
    if not predictions:
        raise DatasetError("no prediction columns given")
    models = list(predictions)
    cols = {}
    for m in models:
        missing = [i for i in ids if i not in predictions[m]]
        if missing:
            raise DatasetError(f"model {m!r} has no prediction for {', '.join(missing)}")
        cols[m] = [int(predictions[m][i]) for i in ids]
    return DifficultReport(list(ids), [gold[i] for i in ids], models, cols)


def report_from_files(set_path: str | Path, prediction_paths: Mapping[str, str | Path]) -> DifficultReport:
    items = load_difficult_set(set_path)
    preds = {name: load_predictions(p) for name, p in prediction_paths.items()}
    return difficult_report([it.id for it in items], {it.id: it.gold for it in items}, preds)
