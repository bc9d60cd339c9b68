"""
Versioned binary model checkpoints.

Layout: magic b"MNCK", u16 version, u32 length of a UTF-8 JSON block holding
the network config and metadata, then every parameter and running statistic
in declaration order as little-endian float64.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import ValidationError

from multinet.core.errors import (
    ArtifactIOError,
    BadMagicError,
    DataError,
    TruncatedRecordError,
    VersionMismatchError,
)
from multinet.core.models import NetworkConfig
from multinet.model.network import Z2Color

CHECKPOINT_MAGIC = b"MNCK"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sHI")


def checkpoint_bytes(model: Z2Color, meta: Optional[Mapping[str, Any]] = None) -> bytes:
    block = json.dumps(
        {"network": model.config.model_dump(mode="json"), "meta": dict(meta or {})},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    parts = [_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(block)), block]
    parts.extend(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in model.state_dict().values())
    return b"".join(parts)


def model_from_bytes(data: bytes, source: Union[str, Path] = "<bytes>") -> Tuple[Z2Color, Dict[str, Any]]:
    if len(data) < _HEADER.size:
        if data[:4] != CHECKPOINT_MAGIC[: len(data[:4])]:
            raise BadMagicError(source, CHECKPOINT_MAGIC, data[:4])
        raise TruncatedRecordError(source, 0, "header")
    magic, version, block_len = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(source, CHECKPOINT_MAGIC, magic)
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(source, CHECKPOINT_VERSION, version)
    offset = _HEADER.size
    if len(data) < offset + block_len:
        raise TruncatedRecordError(source, 0, "config block")
    try:
        block = json.loads(data[offset:offset + block_len].decode("utf-8"))
        config = NetworkConfig(**block["network"])
    except (ValueError, KeyError, ValidationError) as e:
        raise DataError(f"{source}: unreadable checkpoint config: {e}") from e
    offset += block_len

    model = Z2Color(config)
    state = {}
    for index, (name, target) in enumerate(model.state_dict().items()):
        nbytes = target.size * 8
        if len(data) < offset + nbytes:
            raise TruncatedRecordError(source, index, name)
        state[name] = np.frombuffer(data, dtype="<f8", count=target.size, offset=offset).reshape(target.shape)
        offset += nbytes
    if offset != len(data):
        raise DataError(f"{source}: {len(data) - offset} trailing bytes after the last tensor")
    model.load_state_dict(state)
    return model, dict(block.get("meta", {}))


def save_checkpoint(model: Z2Color, path: Path, meta: Optional[Mapping[str, Any]] = None) -> Path:
    """Write a checkpoint, creating parent directories."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(checkpoint_bytes(model, meta))
    except OSError as e:
        raise ArtifactIOError(path, e) from e
    logger.debug(f"Saved checkpoint {path}")
    return path


def load_checkpoint(path: Path) -> Tuple[Z2Color, Dict[str, Any]]:
    """Read a checkpoint; the returned model is in eval mode."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(path, e) from e
    model, meta = model_from_bytes(data, path)
    return model.eval(), meta
