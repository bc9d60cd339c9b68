"""
Corrective data aggregation: train, drive under supervision, harvest the
expert-sourced ticks, merge, repeat.
"""

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from multinet.core.errors import ArtifactIOError, DataError, DivergenceError
from multinet.core.models import (
    BehavioralMode,
    NetworkConfig,
    NetworkVariant,
    OperationalMode,
    OverridePolicy,
    SimConfig,
    TrainConfig,
)
from multinet.dagger.supervisor import supervise
from multinet.data.moments import Dataset
from multinet.data.pipeline import SkipReport, assemble_moments, balance_by_mode, interpolate_streams, split
from multinet.harness.metrics import mean_autonomy
from multinet.harness.training import train
from multinet.model.network import Z2Color, build_model
from multinet.runtime.orchestrator import JobRunner
from multinet.sim.episode import EpisodeLog, NetworkPolicy
from multinet.sim.experts import expert_for
from multinet.sim.track import Track

ROUND_COLUMNS = (
    "round",
    "episodes",
    "harvested_expert",
    "harvested_correctional",
    "dataset_size",
    "correctional_fraction",
    "autonomy_pct",
)

# (round, mode, episode) -> scene for that supervised episode
TrackFactory = Callable[[int, BehavioralMode, int], Track]


@dataclass(frozen=True)
class AggregationRound:
    round: int
    episodes: int
    harvested_expert: int
    harvested_correctional: int
    dataset_size: int
    correctional_fraction: float
    autonomy_pct: float


def harvest(log: EpisodeLog) -> Tuple[Dataset, SkipReport]:
    """
    Moments from the expert-sourced ticks of one episode.

    Labels are the oracle's commands at the ten following ticks, so no
    network output ever becomes a label. Autonomous ticks are skipped, and
    so are ticks whose label window reaches into an autonomous run.
    """
    steer, motor, camera = log.to_streams()
    gridded = interpolate_streams(steer, motor, log.dt_ms)
    dataset, report = assemble_moments(gridded, camera, log.mode, log.dt_ms)
    logger.debug(
        f"Harvested {report.emitted} moments from {log.ticks} ticks "
        f"({report.skipped['autonomous']} autonomous, "
        f"{report.skipped['autonomous_lookahead']} with autonomous labels skipped)"
    )
    return dataset, report


def _aggregate_round(
    round_index: int,
    dataset: Dataset,
    train_config: TrainConfig,
    network_config: NetworkConfig,
    checkpoint_dir: Optional[Path],
) -> Z2Color:
    seed = train_config.seed + round_index
    modes = dataset.modes_present()
    view = balance_by_mode(dataset, seed, modes)
    train_set, val_set = split(view, train_config.validation_fraction, seed, modes)
    model = build_model(
        network_config.model_copy(
            update={"variant": NetworkVariant.MULTINET, "seed": network_config.seed + round_index}
        )
    )
    round_dir = Path(checkpoint_dir) / f"round{round_index:02d}" if checkpoint_dir is not None else None
    try:
        train(model, train_set, val_set, train_config, trial=round_index, network="multinet", checkpoint_dir=round_dir)
    except DivergenceError as e:
        raise DivergenceError("training diverged", epoch=e.epoch, batch=e.batch, round_index=round_index) from e
    return model


def iterate(
    initial: Dataset,
    rounds: int,
    train_config: TrainConfig,
    network_config: NetworkConfig,
    sim_config: SimConfig,
    override: OverridePolicy,
    tracks: TrackFactory,
    episodes_per_mode: int,
    duration_s: float,
    evaluated_modes: Sequence[BehavioralMode] = (BehavioralMode.DIRECT, BehavioralMode.FURTIVE),
    threads: int = 1,
    checkpoint_dir: Optional[Path] = None,
) -> Tuple[List[AggregationRound], Dataset]:
    """
    Run `rounds` aggregation rounds.

    Each round trains a MultiNet on a mode-balanced view of the aggregate,
    drives supervised episodes in every mode present, harvests them and
    appends the harvest to the aggregate. The aggregate itself is never
    balanced or pruned.

    Returns:
        One summary per round and the final aggregate
    """
    if rounds < 1:
        raise DataError("at least one aggregation round is required")
    if len(initial) == 0:
        raise DataError("the initial dataset is empty")
    aggregate = initial
    summaries: List[AggregationRound] = []

    for r in range(1, rounds + 1):
        model = _aggregate_round(r, aggregate, train_config, network_config, checkpoint_dir)
        modes = aggregate.modes_present()
        items = [(mode, e) for mode in modes for e in range(episodes_per_mode)]

        def episode(item: Tuple[BehavioralMode, int]) -> EpisodeLog:
            mode, e = item
            local = Z2Color(model.config)
            local.load_state_dict(model.state_dict())
            oracle = expert_for(mode, sim_config)
            return supervise(
                NetworkPolicy(local, mode),
                oracle,
                override,
                tracks(r, mode, e),
                sim_config,
                duration_s,
                render_images=True,
            )

        logs = JobRunner(threads, job_type="episode").map(episode, items)
        harvested = [harvest(log)[0] for log in logs]
        before = len(aggregate)
        aggregate = Dataset.concat([aggregate] + [h for h in harvested if len(h)])
        counts = {op: sum(h.operational_counts()[op] for h in harvested) for op in OperationalMode}
        mix = aggregate.operational_counts()
        expert_sourced = mix[OperationalMode.EXPERT] + mix[OperationalMode.CORRECTIONAL]

        scored = [m for m in evaluated_modes if any(log.mode is m for log in logs)]
        autonomy = (
            float(np.mean([mean_autonomy(log for log in logs if log.mode is m) for m in scored])) if scored else 100.0
        )
        summary = AggregationRound(
            round=r,
            episodes=len(logs),
            harvested_expert=counts[OperationalMode.EXPERT],
            harvested_correctional=counts[OperationalMode.CORRECTIONAL],
            dataset_size=len(aggregate),
            correctional_fraction=mix[OperationalMode.CORRECTIONAL] / expert_sourced if expert_sourced else 0.0,
            autonomy_pct=autonomy,
        )
        summaries.append(summary)
        logger.info(
            f"Round {r}/{rounds}: {len(aggregate) - before} moments harvested, dataset {len(aggregate)}, "
            f"correctional {summary.correctional_fraction:.2%}, autonomy {autonomy:.2f}%"
        )
    return summaries, aggregate


def write_round_summary(rounds: Sequence[AggregationRound], path: Path) -> Path:
    """One CSV row per round."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(ROUND_COLUMNS)
            for summary in rounds:
                row = asdict(summary)
                row["correctional_fraction"] = f"{summary.correctional_fraction:.6f}"
                row["autonomy_pct"] = f"{summary.autonomy_pct:.4f}"
                writer.writerow([row[c] for c in ROUND_COLUMNS])
    except OSError as e:
        raise ArtifactIOError(path, e) from e
    return path
