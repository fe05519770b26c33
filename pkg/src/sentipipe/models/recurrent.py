"""LSTM and bidirectional LSTM classifiers.

Gates follow the usual formulation::

    i, f, o = sigmoid(.), g = tanh(.)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

Positions past a sample's length leave the state untouched, so the final
state of a padded sequence equals the state after its last real token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sentipipe.models.base import N_CLASSES, Batch, Classifier, ShapeError, linear
from sentipipe.numerics import Tensor, ops


@dataclass(frozen=True)
class LstmConfig:
    max_len: int = 50
    dim: int = 300
    hidden: int = 0  # cell size; 0 means "same as dim"
    fc_size: int = 40
    dropout: float = 0.5
    n_classes: int = N_CLASSES

    @property
    def cell(self) -> int:
        return self.hidden or self.dim


BiLstmConfig = LstmConfig


class LstmEncoder:
    """One LSTM direction; owns ``{prefix}.Wx``, ``.Wh`` and ``.b`` in the model."""

    def __init__(self, model: Classifier, prefix: str, dim: int, cell: int):
        self.dim, self.cell = dim, cell
        self.Wx = model.weight(f"{prefix}.Wx", dim, 4 * cell)
        self.Wh = model.weight(f"{prefix}.Wh", cell, 4 * cell)
        b = np.zeros(4 * cell)
        b[cell : 2 * cell] = 1.0  # forget gate
        self.b = model.param(f"{prefix}.b", b)

    def run(self, x: np.ndarray, lengths: np.ndarray) -> Tensor:
        """Final hidden state for inputs ``x`` (B, s, d) with per-row ``lengths``."""
        bsz, s, _ = x.shape
        n = self.cell
        h = Tensor(np.zeros((bsz, n)))
        c = Tensor(np.zeros((bsz, n)))
        for t in range(s):
            live = lengths > t
            if not live.any():
                break
            z = ops.add(ops.add(ops.matmul(Tensor(x[:, t, :]), self.Wx), ops.matmul(h, self.Wh)), self.b)
            i = ops.sigmoid(z[:, :n])
            f = ops.sigmoid(z[:, n : 2 * n])
            g = ops.tanh(z[:, 2 * n : 3 * n])
            o = ops.sigmoid(z[:, 3 * n :])
            c_new = ops.add(ops.mul(f, c), ops.mul(i, g))
            h_new = ops.mul(o, ops.tanh(c_new))
            if live.all():
                h, c = h_new, c_new
            else:
                m = live[:, None].astype(np.float64)
                h = ops.add(ops.mul(h_new, m), ops.mul(h, 1.0 - m))
                c = ops.add(ops.mul(c_new, m), ops.mul(c, 1.0 - m))
        return h


def reverse_valid(x: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Reverse each row's first ``length`` positions, leaving padding in place."""
    out = x.copy()
    for row, n in enumerate(lengths):
        out[row, :n] = x[row, :n][::-1]
    return out


def _sequence(model: Classifier, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
    c = model.config
    x = model.check_batch(batch, "x", 3, (c.dim,))
    if x.shape[1] > c.max_len:
        raise ShapeError(f"sequence length {x.shape[1]} exceeds max_len {c.max_len}")
    lengths = np.asarray(batch.get("lengths", np.full(len(x), x.shape[1])), dtype=np.int64)
    if lengths.shape != (len(x),):
        raise ShapeError("lengths must have one entry per sample")
    return x, np.clip(lengths, 0, x.shape[1])


class _RecurrentHead(Classifier):
    def _head_params(self, width: int) -> None:
        c = self.config
        self.weight("fc.W", width, c.fc_size)
        self.bias("fc.b", c.fc_size)
        self.weight("out.W", c.fc_size, c.n_classes)
        self.bias("out.b", c.n_classes)

    def _head(self, state: Tensor) -> Tensor:
        p = self.config.dropout
        h = self.dropout(state, p)
        h = ops.relu(linear(h, self.params["fc.W"], self.params["fc.b"]))
        h = self.dropout(h, p)
        return linear(h, self.params["out.W"], self.params["out.b"])


class LstmClassifier(_RecurrentHead):
    """Input batch: ``{"x": (B, s, d), "lengths": (B,)}``."""

    family = "lstm"

    def __init__(self, config: LstmConfig, seed: int = 0):
        super().__init__(config, seed)
        self.encoder = LstmEncoder(self, "lstm", config.dim, config.cell)
        self._head_params(config.cell)

    def state(self, batch: Batch) -> Tensor:
        x, lengths = _sequence(self, batch)
        return self.encoder.run(x, lengths)

    def logits(self, batch: Batch) -> Tensor:
        return self._head(self.state(batch))


class BiLstmClassifier(_RecurrentHead):
    """Forward and backward LSTMs; their final states concatenate to ``2 * cell``."""

    family = "bilstm"

    def __init__(self, config: LstmConfig, seed: int = 0):
        super().__init__(config, seed)
        self.fwd = LstmEncoder(self, "fwd", config.dim, config.cell)
        self.bwd = LstmEncoder(self, "bwd", config.dim, config.cell)
        self._head_params(2 * config.cell)

    def state(self, batch: Batch) -> Tensor:
        x, lengths = _sequence(self, batch)
        forward = self.fwd.run(x, lengths)
        backward = self.bwd.run(reverse_valid(x, lengths), lengths)
        return ops.concat([forward, backward], axis=-1)

    def logits(self, batch: Batch) -> Tensor:
        return self._head(self.state(batch))
