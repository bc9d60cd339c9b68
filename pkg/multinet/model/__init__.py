"""
Z2Color network, behavioral-mode encodings and checkpoints.
"""

from multinet.model.checkpoint import checkpoint_bytes, load_checkpoint, model_from_bytes, save_checkpoint
from multinet.model.modes import (
    actuation,
    encode_mode,
    encode_modes,
    prepare_images,
    stack_images,
    unstack_images,
)
from multinet.model.network import Z2Color, build_model, parameter_count

__all__ = [
    "Z2Color",
    "actuation",
    "build_model",
    "checkpoint_bytes",
    "encode_mode",
    "encode_modes",
    "load_checkpoint",
    "model_from_bytes",
    "parameter_count",
    "prepare_images",
    "save_checkpoint",
    "stack_images",
    "unstack_images",
]
