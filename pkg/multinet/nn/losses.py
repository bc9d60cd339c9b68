"""
Trajectory losses.

Predictions and labels are length-20 vectors (steer 1..10 then motor 1..10)
or (B, 20) batches. Batched losses are averaged over the batch.
"""

from typing import Tuple

import numpy as np

from multinet.core.errors import ShapeError
from multinet.core.models import HORIZON_STEPS
from multinet.nn.layers import Tensor

_WIDTH = 2 * HORIZON_STEPS
_FINAL_STEER = HORIZON_STEPS - 1
_FINAL_MOTOR = 2 * HORIZON_STEPS - 1


def _check_pair(pred: Tensor, labels: Tensor) -> None:
    if pred.shape[-1] != _WIDTH:
        raise ShapeError(f"prediction has {pred.shape[-1] // 2} steps per channel, expected {HORIZON_STEPS}")
    if labels.shape[-1] != _WIDTH:
        raise ShapeError(f"labels have {labels.shape[-1] // 2} steps per channel, expected {HORIZON_STEPS}")
    if pred.shape != labels.shape:
        raise ShapeError(f"prediction shape {pred.shape} != label shape {labels.shape}")


def mse_train_loss(pred: Tensor, labels: Tensor) -> Tuple[float, Tensor]:
    """
    Mean squared error over all ten steps of both channels.

    Returns:
        (1/2n) * sum of squared errors, batch-averaged, and its gradient
        with respect to pred
    """
    _check_pair(pred, labels)
    diff = pred - labels
    batch = diff.shape[0] if diff.ndim == 2 else 1
    loss = float(np.sum(diff * diff)) / (2.0 * HORIZON_STEPS * batch)
    grad = diff / (HORIZON_STEPS * batch)
    return loss, grad


def validation_losses(pred: Tensor, labels: Tensor) -> Tensor:
    """Per-sample final-step loss 0.5 * ((s'_n - s_n)^2 + (m'_n - m_n)^2)."""
    _check_pair(pred, labels)
    p = np.atleast_2d(pred)
    y = np.atleast_2d(labels)
    ds = p[:, _FINAL_STEER] - y[:, _FINAL_STEER]
    dm = p[:, _FINAL_MOTOR] - y[:, _FINAL_MOTOR]
    return 0.5 * (ds * ds + dm * dm)


def mse_validation_loss(pred: Tensor, labels: Tensor) -> float:
    """Final-step loss, batch-averaged."""
    return float(np.mean(validation_losses(pred, labels)))


def mse_validation_grad(pred: Tensor, labels: Tensor) -> Tensor:
    """Gradient of mse_validation_loss; nonzero only at the final steps."""
    _check_pair(pred, labels)
    batch = pred.shape[0] if pred.ndim == 2 else 1
    grad = np.zeros_like(pred)
    grad[..., _FINAL_STEER] = (pred[..., _FINAL_STEER] - labels[..., _FINAL_STEER]) / batch
    grad[..., _FINAL_MOTOR] = (pred[..., _FINAL_MOTOR] - labels[..., _FINAL_MOTOR]) / batch
    return grad
