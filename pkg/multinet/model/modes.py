"""
Network input and output encodings: mode tensors, stacked images, actuation.
"""

from typing import Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from multinet.core.errors import ShapeError
from multinet.core.models import HORIZON_STEPS, MODE_TENSOR_SHAPE, BehavioralMode
from multinet.nn.layers import Tensor

ModeSpec = Union[BehavioralMode, Sequence[BehavioralMode], npt.NDArray[np.integer]]


def encode_mode(mode: BehavioralMode) -> Tensor:
    """One-hot 3x13x26 tensor with the mode's channel set to ones."""
    tensor = np.zeros(MODE_TENSOR_SHAPE)
    tensor[mode.index] = 1.0
    return tensor


def encode_modes(modes: ModeSpec, batch: int) -> Tensor:
    """Mode tensors for a batch, from one mode or one mode per sample."""
    if isinstance(modes, BehavioralMode):
        indices = np.full(batch, modes.index)
    elif isinstance(modes, np.ndarray):
        indices = modes.astype(np.int64)
    else:
        indices = np.array([BehavioralMode(m).index for m in modes], dtype=np.int64)
    if indices.shape != (batch,):
        raise ShapeError(f"got {indices.size} modes for a batch of {batch}")
    if indices.size and (indices.min() < 0 or indices.max() >= MODE_TENSOR_SHAPE[0]):
        raise ShapeError(f"mode index out of range 0..{MODE_TENSOR_SHAPE[0] - 1}")
    onehot = np.eye(MODE_TENSOR_SHAPE[0])[indices]
    return np.broadcast_to(
        onehot[:, :, np.newaxis, np.newaxis], (batch,) + MODE_TENSOR_SHAPE
    ).copy()


def stack_images(
    left_t: npt.NDArray, right_t: npt.NDArray, left_prev: npt.NDArray, right_prev: npt.NDArray
) -> Tensor:
    """
    Channel-concatenate four HxWx3 images into a 12xHxW tensor.

    Channel order is left_t, right_t, left_prev, right_prev, RGB within each.
    """
    images = (left_t, right_t, left_prev, right_prev)
    shape = left_t.shape
    if len(shape) != 3 or shape[2] != 3:
        raise ShapeError(f"images must be HxWx3, got {shape}")
    for name, img in zip(("right_t", "left_prev", "right_prev"), images[1:]):
        if img.shape != shape:
            raise ShapeError(f"{name} has shape {img.shape}, left_t has {shape}")
    return np.concatenate([img.transpose(2, 0, 1) for img in images], axis=0).astype(np.float64)


def unstack_images(tensor: Tensor) -> Tuple[Tensor, Tensor, Tensor, Tensor]:
    """Inverse of stack_images."""
    if tensor.ndim != 3 or tensor.shape[0] != 12:
        raise ShapeError(f"expected a 12xHxW tensor, got {tensor.shape}")
    parts = [tensor[3 * i:3 * i + 3].transpose(1, 2, 0) for i in range(4)]
    return parts[0], parts[1], parts[2], parts[3]


def prepare_images(images: npt.NDArray[np.uint8]) -> Tensor:
    """
    Turn (N, 4, H, W, 3) stored bytes into a (N, 12, H, W) network input in [0, 1].
    """
    if images.ndim != 5 or images.shape[1] != 4 or images.shape[4] != 3:
        raise ShapeError(f"expected (N, 4, H, W, 3) images, got {images.shape}")
    n, _, h, w, _ = images.shape
    stacked = images.transpose(0, 1, 4, 2, 3).reshape(n, 12, h, w)
    return stacked.astype(np.float64) / 255.0


def actuation(pred: Tensor) -> Tuple[float, float]:
    """Final-step (steer, motor), clamped to [0, 1]."""
    if pred.shape[-1] != 2 * HORIZON_STEPS:
        raise ShapeError(f"prediction length {pred.shape[-1]} != {2 * HORIZON_STEPS}")
    steer = float(np.clip(pred[..., HORIZON_STEPS - 1], 0.0, 1.0))
    motor = float(np.clip(pred[..., 2 * HORIZON_STEPS - 1], 0.0, 1.0))
    return steer, motor
