"""Central finite-difference check of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from sentipipe.numerics.tensor import Tensor

DEFAULT_THRESHOLD = 1e-4


class GradCheckError(ValueError):
    pass


@dataclass
class GradCheckReport:
    errors: dict[str, float] = field(default_factory=dict)
    checked: dict[str, int] = field(default_factory=dict)
    threshold: float = DEFAULT_THRESHOLD

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.threshold

    def summary(self) -> str:
        lines = [f"{name}: {err:.3e} over {self.checked[name]} coords" for name, err in self.errors.items()]
        lines.append(f"max {self.max_error:.3e} -> {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    epsilon: float = 1e-5,
    max_coords: int = 200,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
) -> GradCheckReport:
    """Compare backprop gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must rebuild the graph from the current parameter values on
    every call and return a scalar.  Tensors with more than ``max_coords``
    entries are checked on a seeded random sample of ``max_coords`` coordinates.
    """
    for name, p in params.items():
        if p.data.dtype != np.float64:
            raise GradCheckError(f"parameter {name} is {p.data.dtype}; grad_check needs float64")
    for p in params.values():
        p.zero_grad()
    loss = loss_fn()
    if loss.size != 1 or not np.isfinite(loss.data).all():
        raise GradCheckError(f"loss must be a finite scalar, got {loss.data!r}")
    loss.backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }
    rng = np.random.default_rng(seed)
    report = GradCheckReport(threshold=threshold)
    for name, p in params.items():
        flat = p.data.reshape(-1)
        if flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        worst = 0.0
        agrad = analytic[name].reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + epsilon
            up = float(loss_fn().data)
            flat[i] = orig - epsilon
            down = float(loss_fn().data)
            flat[i] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise GradCheckError(f"non-finite loss while perturbing {name}[{i}]")
            numeric = (up - down) / (2.0 * epsilon)
            worst = max(worst, relative_error(float(agrad[i]), numeric))
        report.errors[name] = worst
        report.checked[name] = int(len(coords))
    for p in params.values():
        p.zero_grad()
    return report
