"""
Core module for the multi-modal driving workbench.
"""

from .errors import (
    ArtifactIOError,
    BadMagicError,
    ConfigError,
    DataError,
    DivergenceError,
    ExitCode,
    ShapeError,
    SimulationError,
    TrainingError,
    TruncatedRecordError,
    VersionMismatchError,
    WorkbenchError,
)

__all__ = [
    "ArtifactIOError",
    "BadMagicError",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "ExitCode",
    "ShapeError",
    "SimulationError",
    "TrainingError",
    "TruncatedRecordError",
    "VersionMismatchError",
    "WorkbenchError",
]
