"""Dense tensor kernel with reverse-mode differentiation and a gradient checker."""

from __future__ import annotations

import numpy as np

from sentipipe.numerics import tensor as ops
from sentipipe.numerics.gradcheck import GradCheckError, GradCheckReport, grad_check, relative_error
from sentipipe.numerics.tensor import Tensor, no_grad

PROB_FLOOR = 1e-12

__all__ = [
    "GradCheckError",
    "GradCheckReport",
    "Tensor",
    "cross_entropy",
    "grad_check",
    "no_grad",
    "ops",
    "relative_error",
    "softmax",
]


def softmax(logits) -> np.ndarray:
    """Stable softmax over the last axis."""
    x = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("softmax input contains NaN or Inf")
    z = np.exp(x - x.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def cross_entropy(probs, gold: int) -> float:
    """-log(probs[gold]) with probabilities floored at 1e-12."""
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= gold < p.shape[-1]:
        raise IndexError(f"gold class {gold} out of range for {p.shape[-1]} classes")
    return float(-np.log(max(p[gold], PROB_FLOOR)))
