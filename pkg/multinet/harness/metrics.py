"""
Evaluation metrics: percentage autonomy, relative loss gap, confidence
intervals and checkpoint selection.
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from multinet.core.errors import DataError
from multinet.sim.episode import EpisodeLog


@dataclass
class LossCurve:
    """Per-epoch training and validation losses of one network in one trial."""

    network: str
    trial: int
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    moments_per_epoch: List[int] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.val_loss)

    def check(self) -> None:
        if len(self.train_loss) != len(self.val_loss):
            raise DataError(f"{self.network} trial {self.trial}: train and validation curves differ in length")
        values = np.asarray(self.train_loss + self.val_loss, dtype=np.float64)
        if values.size and (not np.all(np.isfinite(values)) or values.min() < 0.0):
            raise DataError(f"{self.network} trial {self.trial}: losses must be finite and non-negative")


def autonomy_from_times(correction_s: float, elapsed_s: float) -> float:
    """(1 - correction time / elapsed time) * 100."""
    if elapsed_s <= 0.0:
        raise DataError("autonomy needs a positive elapsed time")
    if not 0.0 <= correction_s <= elapsed_s:
        raise DataError(f"correction time {correction_s} s outside [0, {elapsed_s}] s")
    return (1.0 - correction_s / elapsed_s) * 100.0


def autonomy(log: EpisodeLog) -> float:
    """Percentage autonomy of one episode; correction time is dt times the correctional ticks."""
    return autonomy_from_times(log.correctional_ticks * log.dt_ms / 1000.0, log.elapsed_s)


def mean_autonomy(logs: Iterable[EpisodeLog]) -> float:
    """Autonomy over several episodes, pooling correction and elapsed time."""
    logs = list(logs)
    if not logs:
        raise DataError("no episodes to score")
    correction = sum(log.correctional_ticks * log.dt_ms for log in logs) / 1000.0
    elapsed = sum(log.elapsed_s for log in logs)
    return autonomy_from_times(correction, elapsed)


def delta_loss_percent(mtl_loss: float, multinet_loss: float) -> float:
    """(MTL loss - MultiNet loss) / MultiNet loss * 100."""
    if multinet_loss <= 0.0:
        raise DataError(f"MultiNet loss must be positive, got {multinet_loss}")
    return (mtl_loss - multinet_loss) / multinet_loss * 100.0


def _samples(samples: Sequence[float]) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DataError(f"need at least 2 samples, got {x.size}")
    return x


def confidence_interval(samples: Sequence[float], level: float = 0.95) -> Tuple[float, float]:
    """
    Two-sided Student-t interval over trials.

    Returns:
        (mean, half-width)
    """
    x = _samples(samples)
    n = len(x)
    sd = float(np.std(x, ddof=1))
    t_crit = float(stats.t.ppf(0.5 + level / 2.0, n - 1))
    return float(np.mean(x)), t_crit * sd / float(np.sqrt(n))


def difference_upper_bound(differences: Sequence[float], level: float = 0.95) -> float:
    """One-sided Student-t upper bound on the mean of paired differences."""
    x = _samples(differences)
    n = len(x)
    sd = float(np.std(x, ddof=1))
    return float(np.mean(x)) + float(stats.t.ppf(level, n - 1)) * sd / float(np.sqrt(n))


def mean_curve(curves: Sequence[LossCurve], which: str = "val") -> np.ndarray:
    """Per-epoch mean over trials, shape (epochs,)."""
    return np.mean(curve_matrix(curves, which), axis=0)


def curve_matrix(curves: Sequence[LossCurve], which: str = "val") -> np.ndarray:
    """(trials, epochs) matrix of one loss kind."""
    if not curves:
        raise DataError("no curves")
    rows = [c.val_loss if which == "val" else c.train_loss for c in curves]
    if len({len(r) for r in rows}) != 1:
        raise DataError("curves have different epoch counts")
    return np.asarray(rows, dtype=np.float64)


def select_model(curves: Sequence[LossCurve]) -> Tuple[int, int]:
    """
    (trial, epoch) with the lowest validation loss; epochs are 1-based.

    Ties go to the lower epoch, then the lower trial.
    """
    best: Optional[Tuple[float, int, int]] = None
    for curve in curves:
        for epoch, loss in enumerate(curve.val_loss, start=1):
            key = (float(loss), epoch, curve.trial)
            if best is None or key < best:
                best = key
    if best is None:
        raise DataError("no validation losses to select from")
    return best[2], best[1]


def average_curves(groups: Sequence[Sequence[LossCurve]], network: str) -> List[LossCurve]:
    """
    Average curves trial by trial across groups (one group per mode).

    Every group must hold the same trials with the same epoch count.
    """
    if not groups:
        raise DataError("no curve groups to average")
    by_trial = [{c.trial: c for c in group} for group in groups]
    trials = sorted(by_trial[0])
    if any(sorted(g) != trials for g in by_trial):
        raise DataError("curve groups cover different trials")
    averaged = []
    for trial in trials:
        members = [g[trial] for g in by_trial]
        averaged.append(
            LossCurve(
                network=network,
                trial=trial,
                train_loss=[float(v) for v in np.mean([m.train_loss for m in members], axis=0)],
                val_loss=[float(v) for v in np.mean([m.val_loss for m in members], axis=0)],
                moments_per_epoch=list(members[0].moments_per_epoch),
            )
        )
    return averaged
