"""
Data moments: assembly from sensor streams, balancing, splitting and files.
"""

from multinet.data.codec import deserialize, serialize
from multinet.data.moments import DataMoment, Dataset, RawStream
from multinet.data.pipeline import (
    GriddedSignals,
    MixReport,
    SkipReport,
    assemble_moments,
    balance_by_mode,
    interpolate_streams,
    mix_report,
    snap_images,
    split,
    stratified_sample,
)

__all__ = [
    "DataMoment",
    "Dataset",
    "GriddedSignals",
    "MixReport",
    "RawStream",
    "SkipReport",
    "assemble_moments",
    "balance_by_mode",
    "deserialize",
    "interpolate_streams",
    "mix_report",
    "serialize",
    "snap_images",
    "split",
    "stratified_sample",
]
