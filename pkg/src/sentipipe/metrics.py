"""Evaluation measures of the Russian sentiment shared tasks.

``f1pm_macro`` averages the F1 of the positive and negative classes and
ignores the neutral class's F1.  ``f1pm_micro`` pools TP/FP/FN over the same
two classes, so a neutral sample predicted as positive still counts as a
false positive.  A class with an undefined precision or recall has F1 0.

Worked case: gold ``[+, +, -, 0]``, predicted ``[+, -, -, 0]``.  Positive has
P = 1/1, R = 1/2, F1 = 2/3; negative has P = 1/2, R = 1/1, F1 = 2/3.  Pooled
TP = 2, FP = 1, FN = 1 gives micro F1 = 4/6 = 2/3.  Accuracy is 3/4.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from sentipipe.corpus import LABELS, Label

METRIC_NAMES = ("accuracy", "f1_macro", "f1pm_macro", "f1pm_micro")
SENTIMENT = (Label.POSITIVE, Label.NEGATIVE)


class MetricsError(ValueError):
    pass


def _as_labels(values: Iterable) -> list[Label]:
    out = []
    for v in values:
        if isinstance(v, Label):
            out.append(v)
        elif isinstance(v, str):
            out.append(Label.parse(v))
        else:
            out.append(Label(int(v)))
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed ``[gold][predicted]`` by class index."""

    counts: tuple[tuple[int, ...], ...]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.array.sum())

    def tp(self, label: Label) -> int:
        return self.counts[label][label]

    def fp(self, label: Label) -> int:
        return sum(self.counts[g][label] for g in LABELS) - self.tp(label)

    def fn(self, label: Label) -> int:
        return sum(self.counts[label]) - self.tp(label)


def confusion(gold: Sequence, pred: Sequence) -> ConfusionMatrix:
    gold, pred = _as_labels(gold), _as_labels(pred)
    if len(gold) != len(pred):
        raise MetricsError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if not gold:
        raise MetricsError("no samples to evaluate")
    counts = [[0] * len(LABELS) for _ in LABELS]
    for g, p in zip(gold, pred):
        counts[g][p] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in counts))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    # 2PR/(P+R) == 2TP/(2TP+FP+FN) whenever P and R are defined and nonzero
    return _ratio(2 * tp, 2 * tp + fp + fn) if tp else 0.0


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    f1_macro: float
    f1pm_macro: float
    f1pm_micro: float
    per_class: Mapping[Label, ClassScores]
    n: int

    def metrics(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_tsv(self) -> str:
        """Machine-readable ``metric<TAB>value`` lines with full float precision."""
        rows = [("n", str(self.n))]
        rows += [(k, repr(v)) for k, v in self.metrics().items()]
        for label in LABELS:
            s = self.per_class[label]
            rows += [
                (f"precision_{label.word}", repr(s.precision)),
                (f"recall_{label.word}", repr(s.recall)),
                (f"f1_{label.word}", repr(s.f1)),
            ]
        return "metric\tvalue\n" + "".join(f"{k}\t{v}\n" for k, v in rows)

    def to_text(self) -> str:
        lines = [f"{k:<12}{100 * v:7.2f}" for k, v in self.metrics().items()]
        return "\n".join(lines)


def evaluate(gold: Sequence, pred: Sequence) -> EvalReport:
    cm = confusion(gold, pred)
    per_class = {}
    for label in LABELS:
        tp, fp, fn = cm.tp(label), cm.fp(label), cm.fn(label)
        per_class[label] = ClassScores(_ratio(tp, tp + fp), _ratio(tp, tp + fn), f1_from_counts(tp, fp, fn))
    tp = sum(cm.tp(c) for c in SENTIMENT)
    fp = sum(cm.fp(c) for c in SENTIMENT)
    fn = sum(cm.fn(c) for c in SENTIMENT)
    return EvalReport(
        accuracy=sum(cm.tp(c) for c in LABELS) / cm.total,
        f1_macro=sum(per_class[c].f1 for c in LABELS) / len(LABELS),
        f1pm_macro=(per_class[Label.POSITIVE].f1 + per_class[Label.NEGATIVE].f1) / 2,
        f1pm_micro=f1_from_counts(tp, fp, fn),
        per_class=per_class,
        n=cm.total,
    )


def mean_metrics(reports: Sequence[EvalReport]) -> dict[str, float]:
    if not reports:
        raise MetricsError("no reports to average")
    return {name: float(np.mean([getattr(r, name) for r in reports])) for name in METRIC_NAMES}


def metrics_to_tsv(values: Mapping[str, float]) -> str:
    return "metric\tvalue\n" + "".join(f"{k}\t{v!r}\n" for k, v in values.items())


# ------------------------------------------------------------ published scores


@dataclass(frozen=True)
class ReferenceScore:
    dataset: str
    metric: str
    value: float  # percentage points


def load_reference(path: str | Path) -> list[ReferenceScore]:
    """Parse ``dataset<TAB>metric<TAB>value`` lines (values in percent)."""
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MetricsError(f"{path}:{lineno}: expected dataset<TAB>metric<TAB>value")
        if parts[0] == "dataset" and parts[1] == "metric":
            continue
        if parts[1] not in METRIC_NAMES:
            raise MetricsError(f"{path}:{lineno}: unknown metric {parts[1]!r}")
        try:
            value = float(parts[2])
        except ValueError:
            raise MetricsError(f"{path}:{lineno}: non-numeric value {parts[2]!r}") from None
        out.append(ReferenceScore(parts[0], parts[1], value))
    return out


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    computed: float  # percentage points
    published: float | None

    @property
    def delta(self) -> float | None:
        return None if self.published is None else self.computed - self.published


def compare_reference(
    report: EvalReport | Mapping[str, float],
    reference: Sequence[ReferenceScore],
    dataset: str | None = None,
) -> list[ComparisonRow]:
    """Pair computed metrics with published ones; no pass/fail judgement is made."""
    values = report.metrics() if isinstance(report, EvalReport) else dict(report)
    published = {}
    for ref in reference:
        if ref.metric not in METRIC_NAMES:
            raise MetricsError(f"unknown metric {ref.metric!r}")
        if dataset is None or ref.dataset == dataset:
            published[ref.metric] = ref.value
    return [ComparisonRow(m, 100.0 * values[m], published.get(m)) for m in METRIC_NAMES if m in values]


def format_comparison(rows: Sequence[ComparisonRow], dataset: str | None = None) -> str:
    has_ref = any(r.published is not None for r in rows)
    head = f"{'metric':<12}{'computed':>10}"
    if has_ref:
        head += f"{'published':>11}{'delta':>9}"
    lines = ([f"# {dataset}"] if dataset else []) + [head]
    for r in rows:
        line = f"{r.metric:<12}{r.computed:10.2f}"
        if has_ref:
            line += f"{'--':>11}{'':>9}" if r.published is None else f"{r.published:11.2f}{r.delta:+9.2f}"
        lines.append(line)
    return "\n".join(lines)


def comparison_to_tsv(rows: Sequence[ComparisonRow]) -> str:
    out = ["metric\tcomputed\tpublished\tdelta"]
    for r in rows:
        pub = "" if r.published is None else repr(r.published)
        delta = "" if r.delta is None else repr(r.delta)
        out.append(f"{r.metric}\t{r.computed!r}\t{pub}\t{delta}")
    return "\n".join(out) + "\n"
