"""
Raw sensor streams, data moments and columnar datasets.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import numpy.typing as npt

from multinet.core.errors import DataError
from multinet.core.models import HORIZON_STEPS, BehavioralMode, OperationalMode

IMAGE_HEIGHT = 26
IMAGE_WIDTH = 52
IMAGES_PER_MOMENT = 4
LABEL_WIDTH = 2 * HORIZON_STEPS


@dataclass
class RawStream:
    """
    Timestamped samples of one sensor.

    Payloads are scalars for steer and motor, or (2, H, W, 3) uint8 stereo
    pairs for the camera. Tags hold operational-mode codes per sample.
    """

    timestamps: npt.NDArray[np.int64]
    values: np.ndarray
    tags: Optional[npt.NDArray[np.uint8]] = None

    def __post_init__(self) -> None:
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if self.timestamps.ndim != 1:
            raise DataError("stream timestamps must be one-dimensional")
        if len(self.values) != len(self.timestamps):
            raise DataError(f"stream has {len(self.timestamps)} timestamps but {len(self.values)} samples")
        if self.tags is not None:
            self.tags = np.asarray(self.tags, dtype=np.uint8)
            if self.tags.shape != self.timestamps.shape:
                raise DataError("stream tags must align with timestamps")
        if np.any(np.diff(self.timestamps) <= 0):
            raise DataError("stream timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class DataMoment:
    """One training packet."""

    images: npt.NDArray[np.uint8]  # (4, H, W, 3): left_t, right_t, left_prev, right_prev
    labels: npt.NDArray[np.float32]  # steer 1..10 then motor 1..10
    behavioral_mode: BehavioralMode
    operational_mode: OperationalMode
    timestamp_ms: int

    @property
    def steer(self) -> npt.NDArray[np.float32]:
        return self.labels[:HORIZON_STEPS]

    @property
    def motor(self) -> npt.NDArray[np.float32]:
        return self.labels[HORIZON_STEPS:]


class Dataset:
    """Ordered collection of data moments stored column by column."""

    def __init__(
        self,
        images: npt.NDArray[np.uint8],
        labels: npt.NDArray[np.float32],
        behavioral: npt.NDArray[np.uint8],
        operational: npt.NDArray[np.uint8],
        timestamps: npt.NDArray[np.uint64],
    ):
        self.images = np.ascontiguousarray(images, dtype=np.uint8)
        self.labels = np.ascontiguousarray(labels, dtype=np.float32)
        self.behavioral = np.ascontiguousarray(behavioral, dtype=np.uint8)
        self.operational = np.ascontiguousarray(operational, dtype=np.uint8)
        self.timestamps = np.ascontiguousarray(timestamps, dtype=np.uint64)
        self._validate()

    def _validate(self) -> None:
        n = len(self.labels)
        if self.images.ndim != 5 or self.images.shape[1] != IMAGES_PER_MOMENT or self.images.shape[4] != 3:
            raise DataError(f"images must be (N, 4, H, W, 3), got {self.images.shape}")
        if self.labels.ndim != 2 or self.labels.shape[1] != LABEL_WIDTH:
            raise DataError(f"labels must be (N, {LABEL_WIDTH}), got {self.labels.shape}")
        for name, column in (
            ("images", self.images),
            ("behavioral", self.behavioral),
            ("operational", self.operational),
            ("timestamps", self.timestamps),
        ):
            if len(column) != n:
                raise DataError(f"column {name} has {len(column)} rows, labels have {n}")
        if n:
            if not np.all(np.isfinite(self.labels)) or self.labels.min() < 0.0 or self.labels.max() > 1.0:
                raise DataError("labels must lie in [0, 1]")
            if self.behavioral.max() > 2:
                raise DataError(f"behavioral mode code {int(self.behavioral.max())} out of range")
            if self.operational.max() > 2:
                raise DataError(f"operational mode code {int(self.operational.max())} out of range")

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    @classmethod
    def empty(cls, height: int = IMAGE_HEIGHT, width: int = IMAGE_WIDTH) -> "Dataset":
        return cls(
            images=np.zeros((0, IMAGES_PER_MOMENT, height, width, 3), dtype=np.uint8),
            labels=np.zeros((0, LABEL_WIDTH), dtype=np.float32),
            behavioral=np.zeros(0, dtype=np.uint8),
            operational=np.zeros(0, dtype=np.uint8),
            timestamps=np.zeros(0, dtype=np.uint64),
        )

    @classmethod
    def from_moments(cls, moments: Sequence[DataMoment]) -> "Dataset":
        if not moments:
            return cls.empty()
        return cls(
            images=np.stack([m.images for m in moments]),
            labels=np.stack([m.labels for m in moments]),
            behavioral=np.array([m.behavioral_mode.index for m in moments], dtype=np.uint8),
            operational=np.array([m.operational_mode.code for m in moments], dtype=np.uint8),
            timestamps=np.array([m.timestamp_ms for m in moments], dtype=np.uint64),
        )

    @classmethod
    def concat(cls, datasets: Iterable["Dataset"]) -> "Dataset":
        parts = [d for d in datasets]
        nonempty = [d for d in parts if len(d)]
        if not nonempty:
            return parts[0] if parts else cls.empty()
        shape = nonempty[0].images.shape[1:]
        for d in nonempty[1:]:
            if d.images.shape[1:] != shape:
                raise DataError(f"cannot concatenate images {d.images.shape[1:]} with {shape}")
        return cls(
            images=np.concatenate([d.images for d in nonempty]),
            labels=np.concatenate([d.labels for d in nonempty]),
            behavioral=np.concatenate([d.behavioral for d in nonempty]),
            operational=np.concatenate([d.operational for d in nonempty]),
            timestamps=np.concatenate([d.timestamps for d in nonempty]),
        )

    def subset(self, indices: npt.ArrayLike) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=self.images[idx],
            labels=self.labels[idx],
            behavioral=self.behavioral[idx],
            operational=self.operational[idx],
            timestamps=self.timestamps[idx],
        )

    # ------------------------------------------------------------------
    # access
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> DataMoment:
        return DataMoment(
            images=self.images[i],
            labels=self.labels[i],
            behavioral_mode=BehavioralMode.from_index(int(self.behavioral[i])),
            operational_mode=OperationalMode.from_code(int(self.operational[i])),
            timestamp_ms=int(self.timestamps[i]),
        )

    def indices_of(self, mode: BehavioralMode) -> npt.NDArray[np.int64]:
        return np.flatnonzero(self.behavioral == mode.index)

    def filter_mode(self, mode: BehavioralMode) -> "Dataset":
        return self.subset(self.indices_of(mode))

    def mode_counts(self) -> Dict[BehavioralMode, int]:
        return {mode: int(np.sum(self.behavioral == mode.index)) for mode in BehavioralMode}

    def operational_counts(self) -> Dict[OperationalMode, int]:
        return {mode: int(np.sum(self.operational == mode.code)) for mode in OperationalMode}

    def modes_present(self) -> List[BehavioralMode]:
        return [mode for mode, count in self.mode_counts().items() if count]

    def equals(self, other: "Dataset") -> bool:
        """Bit-exact equality of every column."""
        return (
            np.array_equal(self.images, other.images)
            and self.labels.tobytes() == other.labels.tobytes()
            and np.array_equal(self.behavioral, other.behavioral)
            and np.array_equal(self.operational, other.operational)
            and np.array_equal(self.timestamps, other.timestamps)
        )

    def __repr__(self) -> str:
        counts = ", ".join(f"{m.value}={c}" for m, c in self.mode_counts().items())
        return f"Dataset(n={len(self)}, {counts})"
