"""
Expert demonstrations: oracle episodes over seeded tracks, turned into data moments.
"""

from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from multinet.core.models import BehavioralMode, OperationalMode, SimConfig, TrackFeatures
from multinet.data.moments import Dataset
from multinet.data.pipeline import SkipReport, assemble_moments, interpolate_streams
from multinet.runtime.orchestrator import JobRunner
from multinet.sim.episode import run_episode, start_pose
from multinet.sim.experts import expert_for
from multinet.sim.track import Track, generate_track


def scene_seed(seed: int, mode: BehavioralMode, episode: int, stream: int = 0) -> int:
    """Deterministic per-episode seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, mode.index, episode, stream]).generate_state(1)[0])


def scene_for(
    seed: int, mode: BehavioralMode, episode: int, length_m: float, features: TrackFeatures, config: SimConfig
) -> Track:
    return generate_track(scene_seed(seed, mode, episode), length_m, features, config.car_width)


@dataclass
class Collection:
    """Moments of one behavioral mode and how they were gathered."""

    mode: BehavioralMode
    dataset: Dataset
    skipped: SkipReport
    episodes: int
    collisions: int

    def manifest_entry(self) -> dict:
        counts = self.dataset.operational_counts()
        return {
            "moments": len(self.dataset),
            "episodes": self.episodes,
            "collisions": self.collisions,
            "expert": counts[OperationalMode.EXPERT],
            "correctional": counts[OperationalMode.CORRECTIONAL],
            "skipped": dict(self.skipped.skipped),
        }


def collect_expert_data(
    mode: BehavioralMode,
    episodes: int,
    seed: int,
    features: TrackFeatures,
    config: SimConfig,
    duration_s: float,
    length_m: float = 200.0,
    max_moments: Optional[int] = None,
    threads: int = 1,
) -> Collection:
    """
    Drive the mode's oracle over `episodes` seeded tracks and assemble moments.

    Args:
        mode: Behavioral mode to demonstrate
        episodes: Number of episodes, one track each
        seed: Run seed
        features: Scenario features of the generated tracks
        config: Simulator constants
        duration_s: Episode length
        length_m: Track length
        max_moments: Optional cap, applied by a seeded order-preserving subsample
        threads: Worker threads for the episodes
    """

    def episode(e: int) -> Tuple[Dataset, SkipReport, int]:
        track = scene_for(seed, mode, e, length_m, features, config)
        rng = np.random.default_rng(np.random.SeedSequence(scene_seed(seed, mode, e, stream=1)))
        oracle = expert_for(mode, config)
        log = run_episode(oracle, mode, track, config, duration_s, start=start_pose(track, config, rng))
        steer, motor, camera = log.to_streams()
        dataset, report = assemble_moments(interpolate_streams(steer, motor, log.dt_ms), camera, mode, log.dt_ms)
        return dataset, report, log.collisions

    results = JobRunner(threads, job_type=f"{mode.value} episode").map(episode, list(range(episodes)))
    dataset = Dataset.concat([r[0] for r in results])
    skipped = SkipReport()
    for _, report, _ in results:
        skipped = skipped.merge(report)
    collisions = sum(r[2] for r in results)
    if collisions:
        logger.warning(f"{mode.value} oracle collided on {collisions} ticks")

    if max_moments is not None and len(dataset) > max_moments:
        rng = np.random.default_rng(np.random.SeedSequence([seed, mode.index, 2]))
        dataset = dataset.subset(np.sort(rng.choice(len(dataset), size=max_moments, replace=False)))
    logger.info(f"Collected {len(dataset)} {mode.value} moments from {episodes} episodes")
    return Collection(mode=mode, dataset=dataset, skipped=skipped, episodes=episodes, collisions=collisions)


def collect_all(
    modes: List[BehavioralMode],
    episodes: int,
    seed: int,
    features: Mapping[BehavioralMode, TrackFeatures],
    config: SimConfig,
    duration_s: float,
    length_m: float = 200.0,
    max_moments: Optional[int] = None,
    threads: int = 1,
) -> List[Collection]:
    """collect_expert_data for each mode; `features` maps mode to TrackFeatures."""
    return [
        collect_expert_data(mode, episodes, seed, features[mode], config, duration_s, length_m, max_moments, threads)
        for mode in modes
    ]
