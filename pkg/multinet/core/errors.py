"""
Exception hierarchy and process exit codes.
"""

from enum import IntEnum
from pathlib import Path
from typing import Optional, Union


class ExitCode(IntEnum):
    """Process exit codes used by the command-line interface."""
    OK = 0
    CONFIG = 2
    DATA = 3
    TRAINING = 4
    IO = 5
    SIMULATION = 6


class WorkbenchError(Exception):
    """Base class for every error raised by the workbench."""
    exit_code: ExitCode = ExitCode.DATA


class ConfigError(WorkbenchError):
    """Invalid, unknown or incompatible configuration."""
    exit_code = ExitCode.CONFIG


class ShapeError(WorkbenchError, ValueError):
    """Tensor or record shape does not satisfy an operation's contract."""
    exit_code = ExitCode.TRAINING


class DataError(WorkbenchError):
    """Dataset content violates an invariant."""
    exit_code = ExitCode.DATA


class BadMagicError(DataError):
    """File does not start with the expected magic bytes."""

    def __init__(self, path: Union[str, Path], expected: bytes, found: bytes):
        super().__init__(f"{path}: bad magic {found!r}, expected {expected!r}")
        self.path = str(path)
        self.expected = expected
        self.found = found


class VersionMismatchError(DataError):
    """File format version is not supported."""

    def __init__(self, path: Union[str, Path], expected: int, found: int):
        super().__init__(f"{path}: format version {found}, expected {expected}")
        self.path = str(path)
        self.expected = expected
        self.found = found


class TruncatedRecordError(DataError):
    """File ends in the middle of a record."""

    def __init__(self, path: Union[str, Path], record_index: int, detail: str = ""):
        message = f"{path}: truncated at record {record_index}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.path = str(path)
        self.record_index = record_index


class TrainingError(WorkbenchError):
    """Training could not proceed."""
    exit_code = ExitCode.TRAINING


class DivergenceError(TrainingError):
    """A loss became non-finite."""

    def __init__(
        self,
        message: str,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
        round_index: Optional[int] = None,
    ):
        parts = [message]
        if round_index is not None:
            parts.append(f"round={round_index}")
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        if batch is not None:
            parts.append(f"batch={batch}")
        super().__init__(" ".join(parts))
        self.epoch = epoch
        self.batch = batch
        self.round_index = round_index


class SimulationError(WorkbenchError):
    """Simulation world or policy misbehaved."""
    exit_code = ExitCode.SIMULATION


class ArtifactIOError(WorkbenchError):
    """Reading or writing an artifact failed."""
    exit_code = ExitCode.IO

    def __init__(self, path: Union[str, Path], cause: BaseException):
        super().__init__(f"{path}: {cause}")
        self.path = str(path)
        self.cause = cause
