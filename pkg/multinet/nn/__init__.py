"""
Minimal deterministic neural-network engine: layers, losses and Adadelta.
"""

from multinet.nn.gradcheck import GradCheckResult, check_gradient
from multinet.nn.layers import (
    BatchNorm2d,
    Conv2d,
    Layer,
    Linear,
    MaxPool2,
    ReLU,
    Tensor,
    batchnorm,
    conv2d,
    linear,
    maxpool2,
    relu,
)
from multinet.nn.losses import mse_train_loss, mse_validation_loss, validation_losses
from multinet.nn.optim import Adadelta, AdadeltaState, adadelta_step

__all__ = [
    "Adadelta",
    "AdadeltaState",
    "BatchNorm2d",
    "Conv2d",
    "GradCheckResult",
    "Layer",
    "Linear",
    "MaxPool2",
    "ReLU",
    "Tensor",
    "adadelta_step",
    "batchnorm",
    "check_gradient",
    "conv2d",
    "linear",
    "maxpool2",
    "mse_train_loss",
    "mse_validation_loss",
    "relu",
    "validation_losses",
]
