"""Averaged-embedding linear classifier trained with a multiclass hinge loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sentipipe.models.base import N_CLASSES, Batch, Classifier, linear
from sentipipe.numerics import Tensor, ops


@dataclass(frozen=True)
class LinearConfig:
    dim: int = 300
    l2: float = 1e-3
    n_classes: int = N_CLASSES


class LinearClassifier(Classifier):
    """Linear SVM stand-in over sentence-mean embeddings.

    Input batch: ``{"x": (B, d)}``.  The loss is the Crammer-Singer hinge plus
    ``l2 * ||W||^2``; probabilities are the softmax of the scores.
    """

    family = "linear"

    def __init__(self, config: LinearConfig, seed: int = 0):
        super().__init__(config, seed)
        self.W = self.weight("W", config.dim, config.n_classes)
        self.b = self.bias("b", config.n_classes)

    def logits(self, batch: Batch) -> Tensor:
        x = self.check_batch(batch, "x", 2, (self.config.dim,))
        return linear(Tensor(x), self.W, self.b)

    def loss(self, batch: Batch, gold: np.ndarray) -> Tensor:
        hinge = ops.multiclass_hinge(self.logits(batch), gold)
        if self.config.l2 == 0:
            return hinge
        return ops.add(hinge, ops.mul(ops.parameters_norm_sq([self.W]), self.config.l2))
