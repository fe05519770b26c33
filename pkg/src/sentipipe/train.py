"""Mini-batch training, multi-seed runs and grid search."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from sentipipe.metrics import METRIC_NAMES, EvalReport, evaluate, mean_metrics
from sentipipe.models import Classifier
from sentipipe.numerics import Tensor, no_grad

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Encoded:
    """Model-ready features (arrays with a leading sample axis) plus gold labels."""

    features: Mapping[str, np.ndarray]
    labels: np.ndarray
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.labels)
        for k, v in self.features.items():
            if len(v) != n:
                raise ValueError(f"feature {k!r} has {len(v)} rows, expected {n}")
        if self.ids and len(self.ids) != n:
            raise ValueError("ids and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def take(self, index: np.ndarray) -> "Encoded":
        ids = tuple(self.ids[i] for i in index) if self.ids else ()
        return Encoded({k: v[index] for k, v in self.features.items()}, self.labels[index], ids)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    runs: int = 5
    optimizer: str = "adam"
    eval_batch_size: int = 256

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.runs < 1:
            raise ValueError("batch_size, epochs and runs must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")


# Fine-tuning values reported for the pretrained transformer models.
FINETUNE_TRANSFORMER = TrainConfig(lr=2e-5, batch_size=12, epochs=5)
FINETUNE_TRANSFORMER_DROPOUT = 0.1


class SGD:
    def __init__(self, params: Sequence[Tensor], lr: float):
        self.params, self.lr = list(params), lr

    def step(self) -> None:
        for p in self.params:
            if p.grad is not None:
                p.data -= self.lr * p.grad


class Adam:
    def __init__(self, params: Sequence[Tensor], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params, self.lr = list(params), lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            m *= self.b1
            m += (1.0 - self.b1) * p.grad
            v *= self.b2
            v += (1.0 - self.b2) * p.grad * p.grad
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(name: str, params: Sequence[Tensor], lr: float):
    return Adam(params, lr) if name == "adam" else SGD(params, lr)


@dataclass
class History:
    """Per-epoch training loss (evaluation mode, full training set) and validation metric."""

    loss: list[float] = field(default_factory=list)
    valid_metric: list[float | None] = field(default_factory=list)
    metric_name: str = "f1pm_macro"

    def to_tsv(self) -> str:
        rows = ["epoch\tloss\tvalid_metric"]
        for i, (loss, vm) in enumerate(zip(self.loss, self.valid_metric), 1):
            rows.append(f"{i}\t{loss!r}\t{'' if vm is None else repr(vm)}")
        return "\n".join(rows) + "\n"


def _batches(n: int, size: int):
    for lo in range(0, n, size):
        yield slice(lo, min(lo + size, n))


def predict(model: Classifier, data: Encoded, batch_size: int = 256) -> np.ndarray:
    model.eval()
    out = [model.predict(data.take(np.arange(n.start, n.stop)).features)
           for n in _batches(len(data), batch_size)]
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def dataset_loss(model: Classifier, data: Encoded, batch_size: int = 256) -> float:
    was_training = model.training
    model.eval()
    total = 0.0
    with no_grad():
        for sl in _batches(len(data), batch_size):
            part = data.take(np.arange(sl.start, sl.stop))
            total += float(model.loss(part.features, part.labels).data) * len(part)
    model.training = was_training
    return total / len(data)


def score(model: Classifier, data: Encoded, batch_size: int = 256) -> EvalReport:
    return evaluate(data.labels, predict(model, data, batch_size))


def train(
    model: Classifier,
    data: Encoded,
    config: TrainConfig,
    valid: Encoded | None = None,
    metric: str = "f1pm_macro",
) -> History:
    """Train ``model`` in place for ``config.epochs`` epochs; leaves it in evaluation mode.

    Shuffling and dropout draw from generators seeded by ``config.seed``.
    """
    if len(data) == 0:
        raise TrainingError("empty training set")
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}")
    shuffle_rng = np.random.default_rng([config.seed, 2])
    model.dropout_rng = np.random.default_rng([config.seed, 3])
    params = list(model.params.values())
    opt = make_optimizer(config.optimizer, params, config.lr)
    history = History(metric_name=metric)
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = shuffle_rng.permutation(len(data))
        for sl in _batches(len(data), config.batch_size):
            batch = data.take(order[sl])
            for p in params:
                p.zero_grad()
            loss = model.loss(batch.features, batch.labels)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingError(
                    f"non-finite loss {value} at epoch {epoch}, batch starting {sl.start}, seed {config.seed}"
                )
            loss.backward()
            opt.step()
        epoch_loss = dataset_loss(model, data, config.eval_batch_size)
        if not math.isfinite(epoch_loss):
            raise TrainingError(f"non-finite training loss after epoch {epoch}, seed {config.seed}")
        history.loss.append(epoch_loss)
        history.valid_metric.append(
            getattr(score(model, valid, config.eval_batch_size), metric) if valid is not None else None
        )
        log.debug("seed %d epoch %d loss %.6f", config.seed, epoch, epoch_loss)
    for p in params:
        p.zero_grad()
    model.eval()
    return history


ModelFactory = Callable[[int], Classifier]


@dataclass
class RunResult:
    reports: list[EvalReport]
    histories: list[History]
    seeds: list[int]
    models: list[Classifier] = field(default_factory=list, repr=False)

    @property
    def mean(self) -> dict[str, float]:
        return mean_metrics(self.reports)


def run_n(
    factory: ModelFactory,
    train_data: Encoded,
    test_data: Encoded,
    config: TrainConfig,
    valid: Encoded | None = None,
    metric: str = "f1pm_macro",
    keep_models: bool = False,
) -> RunResult:
    """Train ``config.runs`` fresh models with seeds ``seed, seed+1, ...`` and evaluate each."""
    result = RunResult([], [], [])
    for i in range(config.runs):
        seed = config.seed + i
        log.info("run %d/%d seed %d", i + 1, config.runs, seed)
        model = factory(seed)
        hist = train(model, train_data, replace(config, seed=seed), valid, metric)
        result.reports.append(score(model, test_data, config.eval_batch_size))
        result.histories.append(hist)
        result.seeds.append(seed)
        if keep_models:
            result.models.append(model)
    return result


@dataclass(frozen=True)
class GridSpec:
    params: Mapping[str, Sequence[Any]]
    metric: str = "f1pm_macro"

    def cells(self) -> list[dict[str, Any]]:
        """Cartesian product in lexicographic order of (sorted) parameter values."""
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            raise ValueError("grid must have at least one value per parameter")
        names = sorted(self.params)
        values = [sorted(self.params[n], key=_sort_key) for n in names]
        return [dict(zip(names, combo)) for combo in itertools.product(*values)]


def _sort_key(value: Any):
    return (0, value, "") if isinstance(value, (int, float)) else (1, 0, str(value))


@dataclass
class GridResult:
    best: dict[str, Any]
    best_score: float
    cells: list[tuple[dict[str, Any], float]]


TRAIN_KEYS = {"lr", "batch_size", "epochs", "optimizer"}


def grid_search(
    factory: Callable[[Mapping[str, Any], int], Classifier],
    train_data: Encoded,
    valid: Encoded,
    grid: GridSpec,
    config: TrainConfig,
) -> GridResult:
    """Score every cell on ``valid``; the first cell (lexicographic order) with the top score wins.

    Cell keys named like :class:`TrainConfig` fields override training
    settings; every other key is handed to ``factory``.
    """
    if grid.metric not in METRIC_NAMES:
        raise ValueError(f"unknown selection metric {grid.metric!r}")
    scored = []
    best, best_score = None, -math.inf
    for cell in grid.cells():
        overrides = {k: v for k, v in cell.items() if k in TRAIN_KEYS}
        cfg = replace(config, **overrides)
        model = factory(cell, cfg.seed)
        train(model, train_data, cfg, None, grid.metric)
        value = getattr(score(model, valid, cfg.eval_batch_size), grid.metric)
        log.info("grid cell %s -> %s %.6f", cell, grid.metric, value)
        scored.append((cell, value))
        if value > best_score:
            best, best_score = cell, value
    return GridResult(best, best_score, scored)
