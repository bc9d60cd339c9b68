"""
Core data models for the multi-modal driving workbench.
"""

from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
from uuid import UUID, uuid4

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Shape of the behavioral mode tensor concatenated after the first conv block.
MODE_TENSOR_SHAPE: Tuple[int, int, int] = (3, 13, 26)

# Number of future steps predicted per control channel.
HORIZON_STEPS = 10


class BehavioralMode(str, Enum):
    """Driving styles supplied to the network as an input condition."""
    DIRECT = "direct"
    FOLLOW = "follow"
    FURTIVE = "furtive"

    @property
    def index(self) -> int:
        """Fixed channel index of the mode inside the mode tensor."""
        return _BEHAVIORAL_INDEX[self]

    @classmethod
    def from_index(cls, index: int) -> "BehavioralMode":
        return _BEHAVIORAL_ORDER[index]


_BEHAVIORAL_ORDER = (BehavioralMode.DIRECT, BehavioralMode.FOLLOW, BehavioralMode.FURTIVE)
_BEHAVIORAL_INDEX = {mode: i for i, mode in enumerate(_BEHAVIORAL_ORDER)}


class OperationalMode(str, Enum):
    """Who controls the car at a given tick."""
    EXPERT = "expert"
    AUTONOMOUS = "autonomous"
    CORRECTIONAL = "correctional"

    @property
    def code(self) -> int:
        return _OPERATIONAL_CODE[self]

    @classmethod
    def from_code(cls, code: int) -> "OperationalMode":
        return _OPERATIONAL_ORDER[code]

    @property
    def expert_sourced(self) -> bool:
        """True when the acting controls come from the expert."""
        return self is not OperationalMode.AUTONOMOUS


_OPERATIONAL_ORDER = (
    OperationalMode.EXPERT,
    OperationalMode.AUTONOMOUS,
    OperationalMode.CORRECTIONAL,
)
_OPERATIONAL_CODE = {mode: i for i, mode in enumerate(_OPERATIONAL_ORDER)}


class NetworkVariant(str, Enum):
    """Network families compared by the experiments."""
    MULTINET = "multinet"
    MTL = "mtl"


class Eye(str, Enum):
    """Stereo camera eye."""
    LEFT = "left"
    RIGHT = "right"


class NetworkConfig(BaseModel):
    """Architecture of the two-conv, two-fully-connected driving network."""
    model_config = ConfigDict(frozen=True)

    variant: NetworkVariant = NetworkVariant.MULTINET
    image_height: int = Field(26, description="Per-image height in pixels")
    image_width: int = Field(52, description="Per-image width in pixels")
    input_channels: int = Field(12, description="Four stacked RGB images")
    conv1_channels: int = Field(16, gt=0)
    conv2_channels: int = Field(32, gt=0)
    hidden_width: int = Field(128, gt=0)
    output_size: int = Field(2 * HORIZON_STEPS)
    kernel_size: int = 3
    seed: int = 0

    @model_validator(mode="after")
    def check_contract(self) -> "NetworkConfig":
        _, mode_h, mode_w = MODE_TENSOR_SHAPE
        if (self.image_height // 2, self.image_width // 2) != (mode_h, mode_w):
            raise ValueError(
                f"post-pool feature map {self.image_height // 2}x{self.image_width // 2} "
                f"must be exactly {mode_h}x{mode_w}"
            )
        if self.image_height % 2 or self.image_width % 2:
            raise ValueError("image height and width must be even")
        if self.output_size != 2 * HORIZON_STEPS:
            raise ValueError(f"output_size must be {2 * HORIZON_STEPS}")
        if self.input_channels != 12:
            raise ValueError("input_channels must be 12 (four RGB images)")
        if self.kernel_size % 2 != 1:
            raise ValueError("kernel_size must be odd")
        return self

    @property
    def mode_channels(self) -> int:
        return MODE_TENSOR_SHAPE[0] if self.variant is NetworkVariant.MULTINET else 0

    @property
    def conv2_in_channels(self) -> int:
        return self.conv1_channels + self.mode_channels

    @property
    def flat_features(self) -> int:
        _, mode_h, mode_w = MODE_TENSOR_SHAPE
        return self.conv2_channels * (mode_h // 2) * (mode_w // 2)


class AdadeltaConfig(BaseModel):
    """Adadelta hyperparameters."""
    model_config = ConfigDict(frozen=True)

    rho: float = Field(0.9, gt=0.0, lt=1.0)
    epsilon: float = Field(1e-6, gt=0.0)


class TrainConfig(BaseModel):
    """Training schedule for one network."""
    epochs: int = Field(24, ge=1)
    batch_size: int = Field(32, ge=2)
    trials: int = Field(8, ge=1)
    seed: int = 0
    validation_fraction: float = Field(0.10, gt=0.0, lt=1.0)
    optimizer: AdadeltaConfig = Field(default_factory=AdadeltaConfig)
    checkpoint_dir: Optional[Path] = None
    threads: int = Field(1, ge=1)


class SimConfig(BaseModel):
    """Simulator constants."""
    model_config = ConfigDict(frozen=True)

    dt_ms: int = Field(33, gt=0)
    latency_ms: int = Field(330, ge=0)
    v_max: float = Field(2.0, gt=0.0, description="Speed at motor 1.0, m/s")
    max_wheel_angle: float = Field(0.45, gt=0.0, lt=1.5, description="rad")
    wheelbase: float = Field(0.26, gt=0.0, description="m")
    car_width: float = Field(0.2, gt=0.0, description="m")
    speed_time_constant: float = Field(0.3, gt=0.0, description="s")
    camera_baseline: float = Field(0.12, ge=0.0, description="m")
    camera_height: float = Field(0.25, gt=0.0, description="m")
    camera_hfov_deg: float = Field(90.0, gt=0.0, lt=180.0)
    view_distance: float = Field(15.0, gt=0.0, description="m")
    render_height: int = 26
    render_width: int = 52
    seed: int = 0

    @model_validator(mode="after")
    def check_latency(self) -> "SimConfig":
        if self.latency_ms % self.dt_ms:
            raise ValueError("latency_ms must be an integer multiple of dt_ms")
        return self

    @property
    def dt(self) -> float:
        """Tick length in seconds."""
        return self.dt_ms / 1000.0

    @property
    def latency_ticks(self) -> int:
        return self.latency_ms // self.dt_ms

    @property
    def car_radius(self) -> float:
        return self.car_width / 2.0


class TrackFeatures(BaseModel):
    """Scenario features requested from the track generator."""
    model_config = ConfigDict(frozen=True)

    half_width: float = Field(1.0, gt=0.0, description="m")
    obstacles: int = Field(0, ge=0)
    obstacle_radius: Tuple[float, float] = (0.15, 0.22)
    obstacle_spacing: float = Field(10.0, gt=0.0, description="Minimum arclength between obstacles, m")
    foliage_fraction: float = Field(0.0, ge=0.0, le=1.0)
    foliage_bands: int = Field(2, ge=1)
    foliage_depth: float = Field(0.6, gt=0.0, description="Width of a foliage band beyond the edge, m")
    lead_car: bool = False
    waypoint_spacing: float = Field(0.5, gt=0.0)

    @field_validator("obstacle_radius")
    @classmethod
    def check_radius(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not 0.0 < v[0] <= v[1]:
            raise ValueError("obstacle_radius must be an increasing positive range")
        return v

    @classmethod
    def for_mode(cls, mode: BehavioralMode, **overrides: Any) -> "TrackFeatures":
        """Nominal scenario for each behavioral mode."""
        defaults: Dict[str, Any] = {
            BehavioralMode.DIRECT: {"obstacles": 6},
            BehavioralMode.FOLLOW: {"lead_car": True},
            BehavioralMode.FURTIVE: {"foliage_fraction": 0.5},
        }[mode]
        defaults.update(overrides)
        return cls(**defaults)


class OverridePolicy(BaseModel):
    """Rule-based expert override thresholds."""
    model_config = ConfigDict(frozen=True)

    engage_cte: float = Field(0.45, gt=0.0, description="Engage threshold, m")
    release_cte: float = Field(0.25, gt=0.0, description="Release threshold, m")
    horizon_ticks: int = Field(10, ge=0, description="Straight-line collision projection")
    min_run_ticks: int = Field(2, ge=1)

    @model_validator(mode="after")
    def check_hysteresis(self) -> "OverridePolicy":
        if not self.release_cte < self.engage_cte:
            raise ValueError("release_cte must be smaller than engage_cte")
        return self


class JobStatus(str, Enum):
    """Status of a background job."""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class Job(BaseModel):
    """One unit of parallel work (a trial or an episode)."""
    id: UUID = Field(default_factory=uuid4)
    job_type: str
    index: int
    status: JobStatus = JobStatus.PENDING
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    error_message: Optional[str] = None
