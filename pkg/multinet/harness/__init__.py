"""
Training loops, experiments, metrics and reports.
"""

from .metrics import (
    LossCurve,
    autonomy,
    confidence_interval,
    delta_loss_percent,
    difference_upper_bound,
    mean_autonomy,
    select_model,
)
from .training import TrainingResult, train, validate
from .experiments import (
    ExperimentReport,
    ModeContrast,
    evaluate_autonomy,
    mode_contrast,
    multinet_vs_mtl,
    per_mode_comparison,
)
from .report import emit_report, read_tables, write_curves

__all__ = [
    "ExperimentReport",
    "LossCurve",
    "ModeContrast",
    "TrainingResult",
    "autonomy",
    "confidence_interval",
    "delta_loss_percent",
    "difference_upper_bound",
    "emit_report",
    "evaluate_autonomy",
    "mean_autonomy",
    "mode_contrast",
    "multinet_vs_mtl",
    "per_mode_comparison",
    "read_tables",
    "select_model",
    "train",
    "validate",
    "write_curves",
]
