"""
Turn timestamped streams into data moments; balance, split and describe datasets.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger

from multinet.core.errors import DataError
from multinet.core.models import HORIZON_STEPS, BehavioralMode, OperationalMode
from multinet.data.moments import LABEL_WIDTH, Dataset, RawStream

GRID_MS = 33

SKIP_REASONS = (
    "no_history",
    "no_lookahead",
    "out_of_support",
    "autonomous",
    "autonomous_lookahead",
    "missing_image",
)


@dataclass
class GriddedSignals:
    """Steer and motor on a fixed tick grid; NaN where a stream has no support."""

    timestamps: npt.NDArray[np.int64]
    steer: npt.NDArray[np.float64]
    motor: npt.NDArray[np.float64]
    tags: npt.NDArray[np.uint8]

    @property
    def valid(self) -> npt.NDArray[np.bool_]:
        return np.isfinite(self.steer) & np.isfinite(self.motor)

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass
class SkipReport:
    """Grid ticks that produced no moment, counted by reason."""

    ticks: int = 0
    emitted: int = 0
    skipped: Dict[str, int] = field(default_factory=lambda: {reason: 0 for reason in SKIP_REASONS})

    @property
    def total_skipped(self) -> int:
        return sum(self.skipped.values())

    def merge(self, other: "SkipReport") -> "SkipReport":
        return SkipReport(
            ticks=self.ticks + other.ticks,
            emitted=self.emitted + other.emitted,
            skipped={r: self.skipped[r] + other.skipped[r] for r in SKIP_REASONS},
        )


@dataclass(frozen=True)
class MixReport:
    expert: int
    correctional: int

    @property
    def expert_fraction(self) -> float:
        total = self.expert + self.correctional
        return self.expert / total if total else 0.0

    @property
    def correctional_fraction(self) -> float:
        total = self.expert + self.correctional
        return self.correctional / total if total else 0.0


def _interp_on_support(stream: RawStream, grid: npt.NDArray[np.int64]) -> npt.NDArray[np.float64]:
    values = np.asarray(stream.values, dtype=np.float64)
    ts = stream.timestamps
    out = np.interp(grid.astype(np.float64), ts.astype(np.float64), values)
    outside = (grid < ts[0]) | (grid > ts[-1])
    out[outside] = np.nan
    return out


def interpolate_streams(
    steer: RawStream,
    motor: RawStream,
    grid_ms: int = GRID_MS,
    start_ms: Optional[int] = None,
    end_ms: Optional[int] = None,
) -> GriddedSignals:
    """
    Linearly interpolate steer and motor onto a grid_ms tick grid.

    The grid runs from start_ms (default: first steer sample) to end_ms
    (default: last steer sample). Operational-mode tags are held from the
    latest steer sample at or before each tick.
    """
    if len(steer) == 0 or len(motor) == 0:
        raise DataError("cannot interpolate an empty stream")
    if grid_ms <= 0:
        raise DataError(f"grid spacing must be positive, got {grid_ms}")
    start = int(steer.timestamps[0]) if start_ms is None else int(start_ms)
    end = int(steer.timestamps[-1]) if end_ms is None else int(end_ms)
    if end < start:
        return GriddedSignals(
            timestamps=np.zeros(0, dtype=np.int64),
            steer=np.zeros(0),
            motor=np.zeros(0),
            tags=np.zeros(0, dtype=np.uint8),
        )
    grid = np.arange(start, end + 1, grid_ms, dtype=np.int64)

    if steer.tags is None:
        tags = np.full(len(grid), OperationalMode.EXPERT.code, dtype=np.uint8)
    else:
        held = np.searchsorted(steer.timestamps, grid, side="right") - 1
        tags = steer.tags[np.clip(held, 0, len(steer) - 1)]

    return GriddedSignals(
        timestamps=grid,
        steer=_interp_on_support(steer, grid),
        motor=_interp_on_support(motor, grid),
        tags=tags.astype(np.uint8),
    )


def snap_images(images: RawStream, grid: npt.NDArray[np.int64], grid_ms: int = GRID_MS) -> npt.NDArray[np.int64]:
    """
    Index of the nearest frame for each grid tick, ties toward the earlier frame.

    Ticks with no frame within half a grid step get -1.
    """
    ts = images.timestamps
    if len(ts) == 0:
        return np.full(len(grid), -1, dtype=np.int64)
    right = np.clip(np.searchsorted(ts, grid, side="left"), 0, len(ts) - 1)
    left = np.clip(right - 1, 0, len(ts) - 1)
    d_left = np.abs(grid - ts[left])
    d_right = np.abs(ts[right] - grid)
    nearest = np.where(d_left <= d_right, left, right)
    distance = np.minimum(d_left, d_right)
    return np.where(2 * distance <= grid_ms, nearest, -1).astype(np.int64)


def assemble_moments(
    gridded: GriddedSignals,
    images: RawStream,
    behavioral_mode: BehavioralMode,
    grid_ms: int = GRID_MS,
) -> Tuple[Dataset, SkipReport]:
    """
    Build one moment per eligible tick.

    A tick at t is eligible with a t - grid_ms image pair, labels at
    t + grid_ms * k for k = 1..10, and an expert-sourced tag on t and on
    every label tick.
    """
    n = len(gridded)
    report = SkipReport(ticks=n)
    valid = gridded.valid
    controls = np.concatenate([gridded.steer, gridded.motor])
    controls = controls[np.isfinite(controls)]
    if controls.size and (controls.min() < 0.0 or controls.max() > 1.0):
        raise DataError("control values must lie in [0, 1]")
    frame_index = snap_images(images, gridded.timestamps, grid_ms)
    frames = np.asarray(images.values, dtype=np.uint8)

    autonomous = gridded.tags == OperationalMode.AUTONOMOUS.code
    chosen = []
    for i in range(n):
        if i < 1:
            reason = "no_history"
        elif i + HORIZON_STEPS >= n or not valid[i + 1:i + HORIZON_STEPS + 1].all():
            reason = "no_lookahead"
        elif not valid[i]:
            reason = "out_of_support"
        elif autonomous[i]:
            reason = "autonomous"
        elif autonomous[i + 1:i + HORIZON_STEPS + 1].any():
            # the car never applied the oracle's shadow commands on these ticks
            reason = "autonomous_lookahead"
        elif frame_index[i] < 0 or frame_index[i - 1] < 0:
            reason = "missing_image"
        else:
            chosen.append(i)
            continue
        report.skipped[reason] += 1
    report.emitted = len(chosen)

    if not chosen:
        height, width = (frames.shape[2], frames.shape[3]) if frames.ndim == 5 else (26, 52)
        return Dataset.empty(height, width), report

    idx = np.array(chosen, dtype=np.int64)
    ahead = idx[:, np.newaxis] + np.arange(1, HORIZON_STEPS + 1)
    labels = np.concatenate([gridded.steer[ahead], gridded.motor[ahead]], axis=1)
    now = frames[frame_index[idx]]
    prev = frames[frame_index[idx - 1]]
    stacked = np.concatenate([now, prev], axis=1)  # left_t, right_t, left_prev, right_prev

    dataset = Dataset(
        images=stacked,
        labels=labels.astype(np.float32),
        behavioral=np.full(len(idx), behavioral_mode.index, dtype=np.uint8),
        operational=gridded.tags[idx],
        timestamps=gridded.timestamps[idx].astype(np.uint64),
    )
    if report.total_skipped:
        logger.debug(f"Skipped {report.total_skipped}/{n} ticks: {report.skipped}")
    return dataset, report


def balance_by_mode(dataset: Dataset, seed: int, modes: Iterable[BehavioralMode] = tuple(BehavioralMode)) -> Dataset:
    """Down-sample every mode to the smallest mode count, keeping dataset order."""
    counts = dataset.mode_counts()
    modes = list(modes)
    absent = [m.value for m in modes if counts[m] == 0]
    if absent:
        raise DataError(f"cannot balance: no moments for mode(s) {', '.join(absent)}")
    target = min(counts[m] for m in modes)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    keep = []
    for mode in modes:
        indices = dataset.indices_of(mode)
        keep.append(np.sort(rng.choice(indices, size=target, replace=False)))
    selected = np.sort(np.concatenate(keep))
    if len(selected) < len(dataset):
        logger.debug(f"Balanced {len(dataset)} moments down to {len(selected)} ({target} per mode)")
    return dataset.subset(selected)


def split(
    dataset: Dataset,
    validation_fraction: float = 0.10,
    seed: int = 0,
    modes: Optional[Iterable[BehavioralMode]] = None,
) -> Tuple[Dataset, Dataset]:
    """
    Stratified train/validation split, each mode split independently.

    Args:
        dataset: Moments to split
        validation_fraction: Share of each mode held out
        seed: Shuffle seed
        modes: Modes that must be present (defaults to those present)
    """
    if not 0.0 < validation_fraction < 1.0:
        raise DataError(f"validation fraction must lie in (0, 1), got {validation_fraction}")
    strata = list(modes) if modes is not None else dataset.modes_present()
    if not strata:
        raise DataError("cannot split an empty dataset")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    train_idx, val_idx = [], []
    for mode in strata:
        indices = dataset.indices_of(mode)
        if len(indices) < 2:
            raise DataError(f"mode {mode.value} has {len(indices)} moments; at least 2 are needed to split")
        n_val = int(np.floor(validation_fraction * len(indices) + 0.5))
        n_val = min(max(n_val, 1), len(indices) - 1)
        shuffled = rng.permutation(indices)
        val_idx.append(shuffled[:n_val])
        train_idx.append(shuffled[n_val:])
    train = dataset.subset(np.sort(np.concatenate(train_idx)))
    val = dataset.subset(np.sort(np.concatenate(val_idx)))
    return train, val


def mix_report(dataset: Dataset) -> MixReport:
    """Expert versus correctional moment counts."""
    counts = dataset.operational_counts()
    return MixReport(expert=counts[OperationalMode.EXPERT], correctional=counts[OperationalMode.CORRECTIONAL])


def stratified_sample(dataset: Dataset, size: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    """
    Indices of a sample of `size` moments spread evenly over the modes present.

    Each mode contributes size // k moments; the remainder goes to the lowest
    mode indices.
    """
    modes = dataset.modes_present()
    if not modes:
        raise DataError("cannot sample from an empty dataset")
    base, extra = divmod(size, len(modes))
    picks = []
    for i, mode in enumerate(modes):
        want = base + (1 if i < extra else 0)
        indices = dataset.indices_of(mode)
        if want > len(indices):
            raise DataError(f"mode {mode.value} has {len(indices)} moments, {want} requested")
        picks.append(rng.choice(indices, size=want, replace=False))
    return np.concatenate(picks).astype(np.int64)


def label_matrix(dataset: Dataset) -> npt.NDArray[np.float64]:
    """Labels as float64 (N, 20) for the losses."""
    return dataset.labels.astype(np.float64).reshape(-1, LABEL_WIDTH)
