"""Sentiment datasets: labels, samples, TSV loading, splitting and class statistics.

Dataset files are UTF-8 TSV with the header ``id<TAB>text<TAB>entity<TAB>label``.
The entity column is empty for general datasets and required for targeted ones.
Labels are accepted as words (``positive``/``negative``/``neutral``) or as the
integers ``1``/``-1``/``0``; words are written back on output.  Tabs, newlines
and backslashes inside text are escaped as ``\\t``, ``\\n`` and ``\\\\``.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

HEADER = ("id", "text", "entity", "label")


class DatasetError(ValueError):
    """Raised when a dataset file or in-memory dataset violates the schema."""


class Label(enum.IntEnum):
    """Sentiment class; the integer value is the model's class index."""

    POSITIVE = 0
    NEGATIVE = 1
    NEUTRAL = 2

    @property
    def word(self) -> str:
        return self.name.lower()

    @property
    def polarity(self) -> int:
        return _POLARITY[self]

    @classmethod
    def parse(cls, raw: str) -> "Label":
        key = raw.strip().lower()
        try:
            return _PARSE[key]
        except KeyError:
            raise DatasetError(f"unknown label {raw!r}") from None


_POLARITY = {Label.POSITIVE: 1, Label.NEGATIVE: -1, Label.NEUTRAL: 0}
_PARSE = {
    "positive": Label.POSITIVE,
    "negative": Label.NEGATIVE,
    "neutral": Label.NEUTRAL,
    "1": Label.POSITIVE,
    "+1": Label.POSITIVE,
    "-1": Label.NEGATIVE,
    "0": Label.NEUTRAL,
}

LABELS = (Label.POSITIVE, Label.NEGATIVE, Label.NEUTRAL)


class TaskKind(str, enum.Enum):
    GENERAL = "general"
    TARGETED = "targeted"

    @classmethod
    def parse(cls, raw: "str | TaskKind") -> "TaskKind":
        if isinstance(raw, TaskKind):
            return raw
        try:
            return cls(raw.strip().lower())
        except ValueError:
            raise DatasetError(f"unknown task kind {raw!r}") from None


@dataclass(frozen=True)
class Sample:
    id: str
    text: str
    label: Label
    target_entity: str | None = None


@dataclass(frozen=True)
class Dataset:
    name: str
    task_kind: TaskKind
    samples: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise DatasetError(f"dataset {self.name!r} is empty")
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise DatasetError(f"duplicate id {s.id!r} in dataset {self.name!r}")
            seen.add(s.id)
            if self.task_kind is TaskKind.TARGETED:
                check_entity(s)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def labels(self) -> list[Label]:
        return [s.label for s in self.samples]

    def class_counts(self) -> dict[Label, int]:
        counts = {label: 0 for label in LABELS}
        for s in self.samples:
            counts[s.label] += 1
        return counts


def check_entity(sample: Sample) -> None:
    if not sample.target_entity:
        raise DatasetError(f"sample {sample.id!r}: targeted sample without entity")
    if sample.target_entity.casefold() not in sample.text.casefold():
        raise DatasetError(
            f"sample {sample.id!r}: entity {sample.target_entity!r} not found in text"
        )


def escape_field(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def unescape_field(value: str) -> str:
    out = []
    chars = iter(value)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(chars, "")
        out.append({"t": "\t", "n": "\n", "\\": "\\"}.get(nxt, "\\" + nxt))
    return "".join(out)


def read_tsv_rows(path: str | Path, header: Sequence[str]) -> Iterable[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` for every data row, validating the header and width."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path}: not valid UTF-8 ({exc})") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetError(f"{path}: empty file")
    got = tuple(f.strip() for f in lines[0].rstrip("\r").split("\t"))
    if got != tuple(header):
        raise DatasetError(f"{path}:1: expected header {'<TAB>'.join(header)}, got {lines[0]!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DatasetError(
                f"{path}:{lineno}: expected {len(header)} columns, got {len(fields)}"
            )
        yield lineno, fields


def load_dataset(
    path: str | Path,
    task_kind: TaskKind | str,
    format: str = "tsv",
    name: str | None = None,
) -> Dataset:
    """Load and validate a dataset file.

    Any schema violation aborts the whole load with a :class:`DatasetError`
    naming the offending line.
    """
    if format != "tsv":
        raise DatasetError(f"unsupported dataset format {format!r}")
    kind = TaskKind.parse(task_kind)
    samples = []
    seen: dict[str, int] = {}
    for lineno, (sid, text, entity, label) in read_tsv_rows(path, HEADER):
        sid = sid.strip()
        if not sid:
            raise DatasetError(f"{path}:{lineno}: empty id")
        if sid in seen:
            raise DatasetError(f"{path}:{lineno}: duplicate id {sid!r} (first on line {seen[sid]})")
        seen[sid] = lineno
        try:
            parsed = Label.parse(label)
        except DatasetError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
        entity = unescape_field(entity).strip() or None
        sample = Sample(sid, unescape_field(text), parsed, entity)
        if kind is TaskKind.TARGETED:
            try:
                check_entity(sample)
            except DatasetError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
        samples.append(sample)
    if not samples:
        raise DatasetError(f"{path}: no samples")
    return Dataset(name or Path(path).stem, kind, tuple(samples))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    lines = ["\t".join(HEADER)]
    for s in dataset.samples:
        entity = escape_field(s.target_entity or "")
        lines.append("\t".join([s.id, escape_field(s.text), entity, s.label.word]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ClassDistribution:
    """Unrounded class percentages; :meth:`rounded` gives the reporting precision."""

    positive: float
    negative: float
    neutral: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.positive, self.negative, self.neutral)

    def rounded(self, digits: int = 0) -> tuple[float, ...]:
        values = tuple(round(v, digits) for v in self.as_tuple())
        return tuple(int(v) for v in values) if digits == 0 else values


def class_distribution(dataset: Dataset) -> ClassDistribution:
    counts = dataset.class_counts()
    n = len(dataset)
    return ClassDistribution(
        100.0 * counts[Label.POSITIVE] / n,
        100.0 * counts[Label.NEGATIVE] / n,
        100.0 * counts[Label.NEUTRAL] / n,
    )


def split(dataset: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffle with ``seed`` and cut into ``(first, rest)`` with ``round(fraction * n)`` in first."""
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"split fraction must lie in (0, 1), got {fraction}")
    n = len(dataset)
    k = int(round(fraction * n))
    if k == 0 or k == n:
        raise DatasetError(f"fraction {fraction} of {n} samples leaves an empty part")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    first = tuple(dataset.samples[i] for i in order[:k])
    rest = tuple(dataset.samples[i] for i in order[k:])
    return (
        Dataset(f"{dataset.name}.part0", dataset.task_kind, first),
        Dataset(f"{dataset.name}.part1", dataset.task_kind, rest),
    )


# Published volumes and class percentages of the shared-task datasets, keyed
# by a short dataset name: (train volume, test volume, train %, test %).
PUBLISHED_STATS = {
    "romip2013": (4260, 5500, (16, 36, 48), (11, 33, 56)),
    "sentirueval2015_telecom": (5000, 5322, (19, 32, 49), (10, 23, 67)),
    "sentirueval2015_banks": (5000, 5296, (7, 34, 59), (8, 15, 79)),
    "sentirueval2016_telecom": (8643, 2247, (15, 29, 56), (10, 46, 44)),
    "sentirueval2016_banks": (9392, 3313, (8, 18, 74), (10, 22, 68)),
}
