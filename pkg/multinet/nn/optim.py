"""
Adadelta optimizer over named numpy parameters.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from multinet.core.errors import ShapeError
from multinet.core.models import AdadeltaConfig
from multinet.nn.layers import Tensor


@dataclass
class AdadeltaState:
    """Running averages E[g^2] and E[dx^2], keyed like the parameters."""

    square_avg: Dict[str, Tensor] = field(default_factory=dict)
    acc_delta: Dict[str, Tensor] = field(default_factory=dict)
    steps: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, Tensor]) -> "AdadeltaState":
        return cls(
            square_avg={k: np.zeros_like(v) for k, v in params.items()},
            acc_delta={k: np.zeros_like(v) for k, v in params.items()},
        )


def adadelta_step(
    params: Dict[str, Tensor],
    grads: Mapping[str, Tensor],
    state: AdadeltaState,
    rho: float = 0.9,
    eps: float = 1e-6,
) -> AdadeltaState:
    """
    Apply one Adadelta update to params in place.

    Args:
        params: Parameters, updated in place
        grads: Gradients with the same keys and shapes
        state: Accumulators, updated in place
        rho: Decay rate in (0, 1)
        eps: Positive stabilizer

    Returns:
        The updated state
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")

    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        square_avg = state.square_avg.setdefault(name, np.zeros_like(p))
        acc_delta = state.acc_delta.setdefault(name, np.zeros_like(p))
        if square_avg.shape != p.shape or acc_delta.shape != p.shape:
            raise ShapeError(f"optimizer state for {name} does not match parameter shape {p.shape}")

        square_avg *= rho
        square_avg += (1.0 - rho) * g * g
        delta = -np.sqrt(acc_delta + eps) / np.sqrt(square_avg + eps) * g
        p += delta
        acc_delta *= rho
        acc_delta += (1.0 - rho) * delta * delta

    state.steps += 1
    return state


class Adadelta:
    """Stateful wrapper holding the accumulators for one model."""

    def __init__(self, config: Optional[AdadeltaConfig] = None):
        self.config = config or AdadeltaConfig()
        self.state = AdadeltaState()

    def step(self, params: Dict[str, Tensor], grads: Mapping[str, Tensor]) -> None:
        adadelta_step(params, grads, self.state, self.config.rho, self.config.epsilon)
