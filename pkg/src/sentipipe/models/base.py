"""Shared classifier machinery: parameters, modes, encoding and prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from sentipipe.embed import EmbeddingTable
from sentipipe.numerics import Tensor, no_grad
from sentipipe.numerics import ops

N_CLASSES = 3

Batch = Mapping[str, np.ndarray]


class ShapeError(ValueError):
    pass


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


@dataclass(frozen=True)
class SequenceSpec:
    """Fixed sequence geometry: ``max_len`` rows of ``dim`` columns."""

    max_len: int = 50
    dim: int = 300

    def __post_init__(self):
        if self.max_len < 1 or self.dim < 1:
            raise ValueError("max_len and dim must be positive")


def encode_tokens(spec: SequenceSpec, table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    """Embed a token list into an ``(s, d)`` matrix, truncating or zero-padding."""
    if table.dim != spec.dim:
        raise ShapeError(f"table dimension {table.dim} != sequence dimension {spec.dim}")
    out = np.zeros((spec.max_len, spec.dim))
    for i, tok in enumerate(tokens[: spec.max_len]):
        out[i] = table.lookup(tok)
    return out


class Classifier:
    """A trainable K-way classifier built on :mod:`sentipipe.numerics`.

    Subclasses create their parameters in ``__init__`` through :meth:`param`
    and implement :meth:`logits`.
    """

    family = "base"

    def __init__(self, config: Any, seed: int = 0):
        self.config = config
        self.seed = int(seed)
        self.params: dict[str, Tensor] = {}
        self.training = True
        self.dropout_rng: np.random.Generator | None = np.random.default_rng([self.seed, 1])
        self._init_rng = np.random.default_rng([self.seed, 0])

    def param(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name}")
        t = Tensor(np.asarray(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        return t

    def weight(self, name: str, fan_in: int, fan_out: int) -> Tensor:
        return self.param(name, glorot(self._init_rng, fan_in, fan_out))

    def bias(self, name: str, size: int, fill: float = 0.0) -> Tensor:
        return self.param(name, np.full(size, fill))

    def train(self) -> "Classifier":
        self.training = True
        return self

    def eval(self) -> "Classifier":
        self.training = False
        return self

    def dropout(self, x: Tensor, p: float) -> Tensor:
        return ops.dropout(x, p, self.dropout_rng, self.training)

    def logits(self, batch: Batch) -> Tensor:
        raise NotImplementedError

    def loss(self, batch: Batch, gold: np.ndarray) -> Tensor:
        return ops.softmax_cross_entropy(self.logits(batch), gold)

    def forward(self, batch: Batch) -> np.ndarray:
        """Class probabilities, shape ``(B, K)``."""
        with no_grad():
            z = self.logits(batch).data
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)

    def predict(self, batch: Batch) -> np.ndarray:
        return predict_from_probs(self.forward(batch))

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        extra = set(state) - set(self.params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for name, p in self.params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeError(f"{name}: expected shape {p.shape}, got {value.shape}")
            p.data = value.copy()

    def check_batch(self, batch: Batch, key: str, ndim: int, trailing: tuple[int, ...] = ()) -> np.ndarray:
        if key not in batch:
            raise ShapeError(f"{self.family} input needs {key!r}")
        x = np.asarray(batch[key])
        if x.ndim != ndim or (trailing and x.shape[-len(trailing):] != trailing):
            raise ShapeError(f"{self.family}: {key!r} has shape {x.shape}, expected {ndim}-d ending in {trailing}")
        return x


def predict_from_probs(probs: np.ndarray) -> np.ndarray:
    """Argmax with ties going to the lowest class index."""
    return np.argmax(np.asarray(probs), axis=-1)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """``x @ w + b`` with ``w`` stored as (in, out)."""
    return ops.add(ops.matmul(x, w), b)
