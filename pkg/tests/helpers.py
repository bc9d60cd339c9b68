"""
Shared builders for synthetic datasets, episode logs and small networks.
"""

from typing import Mapping, Optional, Sequence

import numpy as np

from multinet.core.models import BehavioralMode, NetworkConfig, NetworkVariant, OperationalMode, TrainConfig
from multinet.data.moments import Dataset
from multinet.sim.episode import EpisodeLog


def tiny_network(variant: NetworkVariant = NetworkVariant.MULTINET, seed: int = 0) -> NetworkConfig:
    """Default geometry with narrow layers."""
    return NetworkConfig(variant=variant, conv1_channels=4, conv2_channels=4, hidden_width=8, seed=seed)


def quick_training(epochs: int = 2, trials: int = 2, seed: int = 3, batch_size: int = 8) -> TrainConfig:
    return TrainConfig(epochs=epochs, trials=trials, seed=seed, batch_size=batch_size)


def make_dataset(
    counts: Mapping[BehavioralMode, int],
    seed: int = 0,
    operational: OperationalMode = OperationalMode.EXPERT,
) -> Dataset:
    """
    Random images with mode-dependent labels.

    Steer labels sit around a per-mode level, motor labels track the mean
    brightness of the current left image.
    """
    rng = np.random.default_rng(seed)
    parts = []
    for mode in BehavioralMode:
        n = counts.get(mode, 0)
        if not n:
            continue
        images = rng.integers(0, 256, size=(n, 4, 26, 52, 3), dtype=np.uint8)
        brightness = images[:, 0].reshape(n, -1).mean(axis=1) / 255.0
        steer = np.clip(0.2 + 0.3 * mode.index + rng.normal(0.0, 0.02, size=(n, 10)), 0.0, 1.0)
        motor = np.clip(brightness[:, np.newaxis] + rng.normal(0.0, 0.02, size=(n, 10)), 0.0, 1.0)
        parts.append(
            Dataset(
                images=images,
                labels=np.concatenate([steer, motor], axis=1).astype(np.float32),
                behavioral=np.full(n, mode.index, dtype=np.uint8),
                operational=np.full(n, operational.code, dtype=np.uint8),
                timestamps=np.arange(n, dtype=np.uint64) * 33,
            )
        )
    return Dataset.concat(parts)


def make_log(
    op_codes: Sequence[int],
    mode: BehavioralMode = BehavioralMode.DIRECT,
    dt_ms: int = 33,
    seed: int = 0,
    with_images: bool = True,
    oracle_steer: Optional[np.ndarray] = None,
) -> EpisodeLog:
    """Episode log with the given per-tick operational codes and random oracle controls."""
    rng = np.random.default_rng(seed)
    n = len(op_codes)
    zeros = np.zeros(n)
    return EpisodeLog(
        mode=mode,
        dt_ms=dt_ms,
        t_ms=np.arange(n, dtype=np.int64) * dt_ms,
        x=zeros.copy(),
        y=zeros.copy(),
        heading=zeros.copy(),
        speed=zeros.copy(),
        steer=np.full(n, 0.5),
        motor=np.full(n, 0.5),
        op=np.asarray(op_codes, dtype=np.uint8),
        cte=zeros.copy(),
        offset=zeros.copy(),
        collision=np.zeros(n, dtype=bool),
        gap=np.full(n, np.nan),
        oracle_steer=oracle_steer if oracle_steer is not None else rng.uniform(0.0, 1.0, n),
        oracle_motor=rng.uniform(0.0, 1.0, n),
        boundary_distance=np.ones(n),
        in_foliage=np.zeros(n, dtype=bool),
        images=rng.integers(0, 256, size=(n, 2, 26, 52, 3), dtype=np.uint8) if with_images else None,
    )


def expert_codes(n: int) -> list:
    return [OperationalMode.EXPERT.code] * n


def autonomous_codes(n: int) -> list:
    return [OperationalMode.AUTONOMOUS.code] * n
