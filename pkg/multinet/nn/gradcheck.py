"""
Central finite-difference gradient checking.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from multinet.nn.layers import Tensor

# Relative errors are taken against max(|analytic|, |numeric|, floor).
_REL_FLOOR = 1e-5


@dataclass(frozen=True)
class GradCheckResult:
    coordinates: int
    max_relative_error: float
    worst_index: int

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_relative_error < tolerance


def check_gradient(
    objective: Callable[[], float],
    x: Tensor,
    analytic: Tensor,
    coordinates: int = 100,
    h: float = 1e-5,
    rng: Optional[np.random.Generator] = None,
) -> GradCheckResult:
    """
    Compare an analytic gradient against central differences.

    Args:
        objective: Scalar function that reads x (perturbed in place)
        x: Array the gradient is taken with respect to
        analytic: Analytic gradient, same shape as x
        coordinates: Number of coordinates sampled (all if x is smaller)
        h: Finite-difference step
        rng: Generator for coordinate sampling

    Returns:
        Summary of the worst coordinate
    """
    if analytic.shape != x.shape:
        raise ValueError(f"analytic gradient shape {analytic.shape} != {x.shape}")
    rng = rng or np.random.default_rng(0)
    flat_x = x.reshape(-1)
    flat_g = analytic.reshape(-1)
    count = min(coordinates, flat_x.size)
    picks = rng.choice(flat_x.size, size=count, replace=False)

    worst, worst_index = 0.0, -1
    for i in picks:
        original = flat_x[i]
        flat_x[i] = original + h
        plus = objective()
        flat_x[i] = original - h
        minus = objective()
        flat_x[i] = original
        numeric = (plus - minus) / (2.0 * h)
        denom = max(abs(numeric), abs(flat_g[i]), _REL_FLOOR)
        rel = abs(numeric - flat_g[i]) / denom
        if rel > worst:
            worst, worst_index = rel, int(i)
    return GradCheckResult(coordinates=count, max_relative_error=worst, worst_index=worst_index)
