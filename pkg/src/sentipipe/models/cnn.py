"""Multi-window convolutional classifier with max-over-time pooling."""

from __future__ import annotations

from dataclasses import dataclass

from sentipipe.models.base import N_CLASSES, Batch, Classifier, linear
from sentipipe.numerics import Tensor, ops


@dataclass(frozen=True)
class CnnConfig:
    max_len: int = 50
    dim: int = 300
    windows: tuple[int, ...] = (2, 3, 4, 5)
    filters: int = 100
    hidden: int = 0  # optional hidden FC layer between pooling and output; 0 disables
    dropout: float = 0.5
    n_classes: int = N_CLASSES

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(int(w) for w in self.windows))
        if max(self.windows) > self.max_len:
            raise ValueError(f"window {max(self.windows)} exceeds max_len {self.max_len}")

    @property
    def feature_size(self) -> int:
        return len(self.windows) * self.filters


class CnnClassifier(Classifier):
    """Input batch: ``{"x": (B, s, d)}`` of embedded, zero-padded tokens.

    Each branch is a valid convolution of ``h`` rows followed by ReLU and a
    max over positions; branch outputs are concatenated.
    """

    family = "cnn"

    def __init__(self, config: CnnConfig, seed: int = 0):
        super().__init__(config, seed)
        c = config
        for h in c.windows:
            self.weight(f"conv{h}.W", h * c.dim, c.filters)
            self.bias(f"conv{h}.b", c.filters)
        width = c.feature_size
        if c.hidden:
            self.weight("fc.W", width, c.hidden)
            self.bias("fc.b", c.hidden)
            width = c.hidden
        self.weight("out.W", width, c.n_classes)
        self.bias("out.b", c.n_classes)

    def features(self, batch: Batch) -> Tensor:
        """Concatenated pooled features, shape ``(B, len(windows) * filters)``."""
        c = self.config
        x = Tensor(self.check_batch(batch, "x", 3, (c.max_len, c.dim)))
        pooled = []
        for h in c.windows:
            windows = ops.unfold(x, h)
            act = ops.relu(linear(windows, self.params[f"conv{h}.W"], self.params[f"conv{h}.b"]))
            pooled.append(ops.max_over(act, axis=1))
        return ops.concat(pooled, axis=-1)

    def logits(self, batch: Batch) -> Tensor:
        c = self.config
        h = self.dropout(self.features(batch), c.dropout)
        if c.hidden:
            h = ops.relu(linear(h, self.params["fc.W"], self.params["fc.b"]))
            h = self.dropout(h, c.dropout)
        return linear(h, self.params["out.W"], self.params["out.b"])
