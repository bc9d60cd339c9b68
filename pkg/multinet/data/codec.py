"""
Binary dataset files.

Layout: magic b"MNDM", u16 version, u64 moment count, then one packed
record per moment: u8 behavioral mode, u8 operational mode, u64 origin
timestamp in ms, 4 x 26 x 52 x 3 RGB bytes, 20 little-endian float32
labels (steer 1..10 then motor 1..10).
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from multinet.core.errors import (
    ArtifactIOError,
    BadMagicError,
    DataError,
    TruncatedRecordError,
    VersionMismatchError,
)
from multinet.data.moments import IMAGE_HEIGHT, IMAGE_WIDTH, IMAGES_PER_MOMENT, LABEL_WIDTH, Dataset

DATASET_MAGIC = b"MNDM"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sHQ")
_IMAGE_BYTES = IMAGES_PER_MOMENT * IMAGE_HEIGHT * IMAGE_WIDTH * 3

RECORD_DTYPE = np.dtype(
    [
        ("bmode", "u1"),
        ("opmode", "u1"),
        ("ts", "<u8"),
        ("images", "u1", (_IMAGE_BYTES,)),
        ("labels", "<f4", (LABEL_WIDTH,)),
    ]
)


def dataset_bytes(dataset: Dataset) -> bytes:
    if dataset.images.shape[1:] != (IMAGES_PER_MOMENT, IMAGE_HEIGHT, IMAGE_WIDTH, 3):
        raise DataError(
            f"dataset images {dataset.images.shape[1:]} do not match the file format "
            f"({IMAGES_PER_MOMENT}, {IMAGE_HEIGHT}, {IMAGE_WIDTH}, 3)"
        )
    n = len(dataset)
    records = np.zeros(n, dtype=RECORD_DTYPE)
    records["bmode"] = dataset.behavioral
    records["opmode"] = dataset.operational
    records["ts"] = dataset.timestamps
    records["images"] = dataset.images.reshape(n, _IMAGE_BYTES)
    records["labels"] = dataset.labels
    return _HEADER.pack(DATASET_MAGIC, DATASET_VERSION, n) + records.tobytes()


def dataset_from_bytes(data: bytes, source: Union[str, Path] = "<bytes>") -> Dataset:
    head = data[: len(DATASET_MAGIC)]
    if not head or head != DATASET_MAGIC[: len(head)]:
        raise BadMagicError(source, DATASET_MAGIC, head)
    if len(data) < _HEADER.size:
        raise TruncatedRecordError(source, 0, "header")
    magic, version, count = _HEADER.unpack_from(data)
    if magic != DATASET_MAGIC:
        raise BadMagicError(source, DATASET_MAGIC, magic)
    if version != DATASET_VERSION:
        raise VersionMismatchError(source, DATASET_VERSION, version)

    body = len(data) - _HEADER.size
    complete = body // RECORD_DTYPE.itemsize
    if complete < count:
        raise TruncatedRecordError(
            source, complete, f"{count} records declared, {body} body bytes present"
        )
    if body > count * RECORD_DTYPE.itemsize:
        raise DataError(f"{source}: {body - count * RECORD_DTYPE.itemsize} trailing bytes after the last record")

    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=_HEADER.size)
    return Dataset(
        images=records["images"].reshape(count, IMAGES_PER_MOMENT, IMAGE_HEIGHT, IMAGE_WIDTH, 3),
        labels=records["labels"].astype(np.float32),
        behavioral=records["bmode"],
        operational=records["opmode"],
        timestamps=records["ts"].astype(np.uint64),
    )


def serialize(dataset: Dataset, path: Path) -> Path:
    """Write a dataset file."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(dataset_bytes(dataset))
    except OSError as e:
        raise ArtifactIOError(path, e) from e
    logger.debug(f"Wrote {len(dataset)} moments to {path}")
    return path


def deserialize(path: Path) -> Dataset:
    """Read a dataset file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ArtifactIOError(path, e) from e
    dataset = dataset_from_bytes(data, path)
    logger.debug(f"Read {len(dataset)} moments from {path}")
    return dataset
