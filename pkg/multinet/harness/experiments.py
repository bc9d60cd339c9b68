"""
MultiNet versus per-mode MTL experiments under equal data budgets, plus
closed-loop autonomy evaluation of the selected checkpoints.
"""

import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from multinet.core.errors import DataError
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
from multinet.data.pipeline import split, stratified_sample
from multinet.harness.metrics import (
    LossCurve,
    average_curves,
    confidence_interval,
    delta_loss_percent,
    mean_autonomy,
    select_model,
)
from multinet.harness.training import BudgetSampler, TrainingResult, train
from multinet.model.checkpoint import load_checkpoint
from multinet.model.network import Z2Color, build_model
from multinet.runtime.orchestrator import JobRunner
from multinet.sim.episode import EpisodeLog, NetworkPolicy
from multinet.sim.experts import expert_for
from multinet.sim.track import Track

MULTINET = "multinet"
MTL = "mtl"
POOLED = "pooled"

EVALUATED_MODES = (BehavioralMode.DIRECT, BehavioralMode.FURTIVE)


@dataclass
class Arm:
    """One network trained in every trial of an experiment."""

    label: str
    family: str
    variant: NetworkVariant
    train_set: Dataset
    val_set: Dataset
    budget: Optional[int] = None  # stratified draw per epoch; None trains on every moment


@dataclass
class ExperimentReport:
    """Curves, intervals, selections and tables of one experiment."""

    experiment_id: str
    seed: int
    trials: int
    epochs: int
    budget: int
    validation_modes: List[BehavioralMode]
    curves: List[LossCurve]
    families: Dict[str, List[LossCurve]]
    selected: Dict[str, Tuple[int, int]]
    checkpoints: Dict[Tuple[str, int, int], Path] = field(default_factory=dict)
    autonomy: Dict[BehavioralMode, Dict[str, float]] = field(default_factory=dict)
    delta_loss: Dict[str, float] = field(default_factory=dict)

    @property
    def run_name(self) -> str:
        return f"{self.experiment_id}__seeds_{self.seed}x{self.trials}"

    def interval_curve(self, family: str, which: str = "val") -> List[Tuple[float, float]]:
        """Per-epoch (mean, 95% half-width) over trials; half-width 0 with a single trial."""
        curves = self.families[family]
        rows = np.asarray([c.val_loss if which == "val" else c.train_loss for c in curves], dtype=np.float64)
        if len(curves) < 2:
            return [(float(v), 0.0) for v in rows[0]]
        return [confidence_interval(rows[:, e]) for e in range(rows.shape[1])]

    def final_val(self, family: str) -> float:
        """Mean final-epoch validation loss over trials."""
        return float(np.mean([c.val_loss[-1] for c in self.families[family]]))


def network_seed(seed: int, trial: int, label: str) -> int:
    return int(np.random.SeedSequence([seed, trial, zlib.crc32(label.encode())]).generate_state(1)[0])


def split_per_mode(
    datasets: Mapping[BehavioralMode, Dataset], validation_fraction: float, seed: int
) -> Tuple[Dict[BehavioralMode, Dataset], Dict[BehavioralMode, Dataset], int]:
    """
    Split each mode's dataset; returns train sets, validation sets and the
    per-network budget M (the training size of every mode).
    """
    if not datasets:
        raise DataError("no datasets given")
    sizes = {mode: len(ds) for mode, ds in datasets.items()}
    if len(set(sizes.values())) != 1:
        listing = ", ".join(f"{m.value}={n}" for m, n in sizes.items())
        raise DataError(f"unequal data budgets across modes ({listing}); balance the datasets first")
    trains, vals = {}, {}
    for mode, ds in datasets.items():
        if ds.modes_present() != [mode]:
            raise DataError(f"dataset for {mode.value} holds moments of other modes")
        trains[mode], vals[mode] = split(ds, validation_fraction, seed, modes=[mode])
    budget = len(next(iter(trains.values())))
    return trains, vals, budget


def _union(parts: Mapping[BehavioralMode, Dataset]) -> Dataset:
    return Dataset.concat([parts[m] for m in BehavioralMode if m in parts])


def _sampler(dataset: Dataset, size: int) -> BudgetSampler:
    def draw(epoch: int, rng: np.random.Generator) -> np.ndarray:
        return stratified_sample(dataset, size, rng)
    return draw


def check_budgets(curves: Sequence[LossCurve]) -> int:
    """Every network saw the same number of moments in every epoch; returns that number."""
    seen = {n for c in curves for n in c.moments_per_epoch}
    if len(seen) != 1:
        raise DataError(f"networks saw different numbers of moments per epoch: {sorted(seen)}")
    return seen.pop()


def _run_arms(
    arms: Sequence[Arm],
    config: TrainConfig,
    network_config: NetworkConfig,
    checkpoint_dir: Optional[Path],
) -> Tuple[List[LossCurve], Dict[Tuple[str, int, int], Path]]:
    def run_trial(trial: int) -> List[Tuple[Arm, TrainingResult]]:
        results = []
        for arm in arms:
            model = build_model(
                network_config.model_copy(
                    update={"variant": arm.variant, "seed": network_seed(config.seed, trial, arm.label)}
                )
            )
            sampler = _sampler(arm.train_set, arm.budget) if arm.budget is not None else None
            results.append(
                (
                    arm,
                    train(
                        model,
                        arm.train_set,
                        arm.val_set,
                        config,
                        trial=trial,
                        network=arm.label,
                        budget_sampler=sampler,
                        checkpoint_dir=checkpoint_dir,
                    ),
                )
            )
        return results

    per_trial = JobRunner(config.threads, job_type="trial").map(run_trial, list(range(config.trials)))
    curves: List[LossCurve] = []
    checkpoints: Dict[Tuple[str, int, int], Path] = {}
    for trial, results in enumerate(per_trial):
        for arm, result in results:
            curves.append(result.curve)
            for epoch, path in enumerate(result.checkpoints, start=1):
                checkpoints[(arm.label, trial, epoch)] = path
    return curves, checkpoints


def _assemble(
    experiment_id: str,
    config: TrainConfig,
    budget: int,
    validation_modes: List[BehavioralMode],
    curves: List[LossCurve],
    checkpoints: Dict[Tuple[str, int, int], Path],
    families: Mapping[str, Sequence[str]],
) -> ExperimentReport:
    for curve in curves:
        curve.check()
    if check_budgets(curves) != budget:
        raise DataError(f"networks saw {check_budgets(curves)} moments per epoch, budget is {budget}")

    grouped: Dict[str, List[LossCurve]] = {}
    for family, labels in families.items():
        groups = [[c for c in curves if c.network == label] for label in labels]
        grouped[family] = groups[0] if len(groups) == 1 else average_curves(groups, family)
    selected = {family: select_model(family_curves) for family, family_curves in grouped.items()}
    report = ExperimentReport(
        experiment_id=experiment_id,
        seed=config.seed,
        trials=config.trials,
        epochs=config.epochs,
        budget=budget,
        validation_modes=validation_modes,
        curves=curves,
        families=grouped,
        selected=selected,
        checkpoints=checkpoints,
    )
    for family, (trial, epoch) in selected.items():
        logger.info(f"{experiment_id}: selected {family} trial {trial} epoch {epoch}")
    return report


def multinet_vs_mtl(
    datasets: Mapping[BehavioralMode, Dataset],
    config: TrainConfig,
    network_config: Optional[NetworkConfig] = None,
    pooled_baseline: bool = False,
    checkpoint_dir: Optional[Path] = None,
    experiment_id: str = "multinet_vs_mtl",
) -> ExperimentReport:
    """
    One MultiNet on the union of all modes against one MTL network per mode.

    Each MTL network trains on its mode's M training moments per epoch;
    MultiNet draws a fresh stratified M from the union each epoch. The MTL
    curve of a trial is the mean over the modes. With pooled_baseline, a
    mode-blind network trains on the same budget drawn from all modes.
    """
    network_config = network_config or NetworkConfig()
    trains, vals, budget = split_per_mode(datasets, config.validation_fraction, config.seed)
    modes = [m for m in BehavioralMode if m in trains]
    union_train, union_val = _union(trains), _union(vals)

    arms = [Arm(MULTINET, MULTINET, NetworkVariant.MULTINET, union_train, union_val, budget)]
    arms += [Arm(f"{MTL}-{m.value}", MTL, NetworkVariant.MTL, trains[m], vals[m]) for m in modes]
    families: Dict[str, List[str]] = {MULTINET: [MULTINET], MTL: [f"{MTL}-{m.value}" for m in modes]}
    if pooled_baseline:
        arms.append(Arm(POOLED, POOLED, NetworkVariant.MTL, union_train, union_val, budget))
        families[POOLED] = [POOLED]

    logger.info(f"{experiment_id}: {len(arms)} networks x {config.trials} trials, {budget} moments per epoch")
    curves, checkpoints = _run_arms(arms, config, network_config, checkpoint_dir)
    report = _assemble(experiment_id, config, budget, modes, curves, checkpoints, families)
    report.delta_loss["all"] = delta_loss_percent(report.final_val(MTL), report.final_val(MULTINET))
    return report


def per_mode_comparison(
    mode: BehavioralMode,
    datasets: Mapping[BehavioralMode, Dataset],
    config: TrainConfig,
    network_config: Optional[NetworkConfig] = None,
    checkpoint_dir: Optional[Path] = None,
) -> ExperimentReport:
    """
    MultiNet trained on every mode against an MTL network trained on `mode`
    alone, both validated on `mode`'s validation set only.
    """
    if mode not in datasets:
        raise DataError(f"no dataset for mode {mode.value}")
    network_config = network_config or NetworkConfig()
    trains, vals, budget = split_per_mode(datasets, config.validation_fraction, config.seed)
    experiment_id = f"per_mode_{mode.value}"
    arms = [
        Arm(MULTINET, MULTINET, NetworkVariant.MULTINET, _union(trains), vals[mode], budget),
        Arm(f"{MTL}-{mode.value}", MTL, NetworkVariant.MTL, trains[mode], vals[mode]),
    ]
    families = {MULTINET: [MULTINET], MTL: [f"{MTL}-{mode.value}"]}
    logger.info(f"{experiment_id}: 2 networks x {config.trials} trials, {budget} moments per epoch")
    curves, checkpoints = _run_arms(arms, config, network_config, checkpoint_dir)
    report = _assemble(experiment_id, config, budget, [mode], curves, checkpoints, families)
    report.delta_loss[mode.value] = delta_loss_percent(report.final_val(MTL), report.final_val(MULTINET))
    return report


def load_selected(report: ExperimentReport, family: str, mode: Optional[BehavioralMode] = None) -> Z2Color:
    """Load the selected checkpoint of a family; MTL needs the mode whose network to load."""
    trial, epoch = report.selected[family]
    label = f"{MTL}-{mode.value}" if family == MTL and mode is not None else family
    path = report.checkpoints.get((label, trial, epoch))
    if path is None:
        raise DataError(f"no checkpoint for {label} trial {trial} epoch {epoch}; train with a checkpoint directory")
    model, _ = load_checkpoint(path)
    return model


def _drive(
    model: Z2Color,
    mode: BehavioralMode,
    tracks: Sequence[Track],
    sim_config: SimConfig,
    override: OverridePolicy,
    duration_s: float,
    threads: int,
) -> List[EpisodeLog]:
    def episode(track: Track) -> EpisodeLog:
        local = Z2Color(model.config)
        local.load_state_dict(model.state_dict())
        oracle = expert_for(mode, sim_config)
        return supervise(NetworkPolicy(local, mode), oracle, override, track, sim_config, duration_s)

    return JobRunner(threads, job_type="episode").map(episode, list(tracks))


def evaluate_autonomy(
    report: ExperimentReport,
    tracks: Mapping[BehavioralMode, Sequence[Track]],
    sim_config: SimConfig,
    override: OverridePolicy,
    duration_s: float,
    threads: int = 1,
) -> Dict[BehavioralMode, Dict[str, float]]:
    """
    Supervised closed-loop autonomy of the selected MultiNet and MTL models.

    Fills and returns report.autonomy as mode -> {multinet, mtl, delta}.
    """
    for mode, mode_tracks in tracks.items():
        if not mode_tracks:
            continue
        scores = {}
        for family in (MULTINET, MTL):
            model = load_selected(report, family, mode)
            logs = _drive(model, mode, mode_tracks, sim_config, override, duration_s, threads)
            scores[family] = mean_autonomy(logs)
        scores["delta"] = scores[MULTINET] - scores[MTL]
        report.autonomy[mode] = scores
        logger.info(
            f"Autonomy in {mode.value}: MultiNet {scores[MULTINET]:.2f}% MTL {scores[MTL]:.2f}% "
            f"delta {scores['delta']:+.2f}"
        )
    return report.autonomy


@dataclass(frozen=True)
class ModeContrast:
    """Furtive against direct driving of one MultiNet on the same foliage track."""

    motor_furtive: float
    motor_direct: float
    boundary_furtive: float
    boundary_direct: float

    @property
    def motor_reduction(self) -> float:
        """Relative drop of the mean motor value inside foliage."""
        return 1.0 - self.motor_furtive / self.motor_direct if self.motor_direct > 0 else 0.0

    @property
    def boundary_reduction(self) -> float:
        """Relative drop of the mean distance to the track boundary."""
        return 1.0 - self.boundary_furtive / self.boundary_direct if self.boundary_direct > 0 else 0.0


def mode_contrast(
    model: Z2Color,
    track: Track,
    sim_config: SimConfig,
    override: OverridePolicy,
    duration_s: float,
) -> ModeContrast:
    """
    Drive the same MultiNet in furtive and in direct mode on one track.

    Only autonomous ticks inside foliage count, for both the motor value
    and the boundary distance.
    """
    if not model.is_multinet:
        raise DataError("mode contrast needs a MultiNet model")
    if not track.foliage:
        raise DataError("mode contrast needs a track with foliage")
    stats: Dict[BehavioralMode, Tuple[float, float]] = {}
    for mode in (BehavioralMode.FURTIVE, BehavioralMode.DIRECT):
        oracle = expert_for(mode, sim_config)
        log = supervise(NetworkPolicy(model, mode), oracle, override, track, sim_config, duration_s)
        in_foliage = (log.op == OperationalMode.AUTONOMOUS.code) & log.in_foliage
        if in_foliage.any():
            stats[mode] = (float(np.mean(log.motor[in_foliage])), float(np.mean(log.boundary_distance[in_foliage])))
        else:
            stats[mode] = (float("nan"), float("nan"))
    return ModeContrast(
        motor_furtive=stats[BehavioralMode.FURTIVE][0],
        motor_direct=stats[BehavioralMode.DIRECT][0],
        boundary_furtive=stats[BehavioralMode.FURTIVE][1],
        boundary_direct=stats[BehavioralMode.DIRECT][1],
    )
