"""
Configuration for the workbench: environment settings and run files.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from dotenv import dotenv_values
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from multinet.core.errors import ArtifactIOError, ConfigError
from multinet.core.models import (
    AdadeltaConfig,
    BehavioralMode,
    NetworkConfig,
    NetworkVariant,
    OverridePolicy,
    SimConfig,
    TrackFeatures,
    TrainConfig,
)


class WorkbenchSettings(BaseSettings):
    """Process-wide settings read from the environment."""

    model_config = SettingsConfigDict(env_prefix="MULTINET_", env_file=".env", extra="ignore")

    log_level: str = Field(default="INFO", description="Logging level")
    log_file: Optional[str] = Field(default=None, description="Optional log file path")
    threads: int = Field(default=1, ge=1, description="Default worker threads")


# Global settings instance
settings = WorkbenchSettings()


def get_settings() -> WorkbenchSettings:
    """Get the global workbench settings."""
    return settings


class RunConfig(BaseModel):
    """Every key a command may consume; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    seed: int = 7
    out: Path = Path("runs")
    threads: int = Field(1, ge=1)
    log_level: str = "INFO"

    # data generation
    modes: List[BehavioralMode] = Field(default_factory=lambda: list(BehavioralMode))
    episodes: int = Field(6, ge=1, description="Expert episodes per mode")
    episode_duration_s: float = Field(60.0, gt=0.0)
    track_length_m: float = Field(200.0, ge=20.0)
    half_width_m: float = Field(1.0, gt=0.0)
    obstacles: int = Field(6, ge=0)
    foliage_fraction: float = Field(0.5, ge=0.0, le=1.0)
    dataset_dir: Optional[Path] = None
    max_moments_per_mode: Optional[int] = Field(None, ge=1)

    # training
    variant: NetworkVariant = NetworkVariant.MULTINET
    mode: Optional[BehavioralMode] = None
    epochs: int = Field(24, ge=1)
    trials: int = Field(8, ge=1)
    batch_size: int = Field(32, ge=2)
    rho: float = Field(0.9, gt=0.0, lt=1.0)
    epsilon: float = Field(1e-6, gt=0.0)
    validation_fraction: float = Field(0.10, gt=0.0, lt=1.0)
    conv1_channels: int = Field(16, ge=1)
    conv2_channels: int = Field(32, ge=1)
    hidden_width: int = Field(128, ge=1)
    pooled_baseline: bool = False

    # driving and evaluation
    checkpoint: Optional[Path] = None
    policy: str = "checkpoint"
    drive_episodes: int = Field(1, ge=1)
    drive_duration_s: float = Field(60.0, gt=0.0)
    eval_episodes: int = Field(2, ge=0)
    eval_duration_s: float = Field(60.0, gt=0.0)
    override_engage_m: float = Field(0.45, gt=0.0)
    override_release_m: float = Field(0.25, gt=0.0)
    override_horizon_ticks: int = Field(10, ge=0)

    # aggregation
    dagger_rounds: int = Field(4, ge=1)
    dagger_episodes: int = Field(2, ge=1, description="Supervised episodes per mode per round")

    @field_validator("*", mode="before")
    @classmethod
    def blank_is_none(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("", "none"):
            return None
        return v

    @field_validator("modes", mode="before")
    @classmethod
    def split_modes(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @field_validator("policy")
    @classmethod
    def check_policy(cls, v: str) -> str:
        if v not in ("checkpoint", "oracle", "hard-left"):
            raise ValueError("policy must be one of checkpoint, oracle, hard-left")
        return v

    @classmethod
    def load(
        cls,
        path: Optional[Path] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "RunConfig":
        """
        Build a run configuration from a key=value file plus flag overrides.

        Args:
            path: Optional configuration file
            overrides: Flag values; entries set to None are ignored

        Returns:
            Validated configuration
        """
        values: Dict[str, Any] = {}
        if path is not None:
            if not Path(path).is_file():
                raise ConfigError(f"configuration file not found: {path}")
            try:
                values.update({k.strip(): v for k, v in dotenv_values(path).items()})
            except OSError as e:
                raise ArtifactIOError(path, e) from e
        if overrides:
            values.update({k: v for k, v in overrides.items() if v is not None})

        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")

        try:
            config = cls(**values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(f"invalid configuration: {problems}") from e

        logger.debug(f"Loaded run configuration with {len(values)} explicit keys")
        return config

    def snapshot(self, path: Path) -> Path:
        """Write the effective configuration as a sorted key=value file."""
        lines = []
        for key in sorted(type(self).model_fields):
            lines.append(f"{key}={_format_value(getattr(self, key))}")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(path, e) from e
        return path

    @property
    def data_dir(self) -> Path:
        return self.dataset_dir if self.dataset_dir is not None else self.out / "data"

    def network_config(self, variant: Optional[NetworkVariant] = None, seed: int = 0) -> NetworkConfig:
        return NetworkConfig(
            variant=variant or self.variant,
            conv1_channels=self.conv1_channels,
            conv2_channels=self.conv2_channels,
            hidden_width=self.hidden_width,
            seed=seed,
        )

    def train_config(self, checkpoint_dir: Optional[Path] = None) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            trials=self.trials,
            seed=self.seed,
            validation_fraction=self.validation_fraction,
            optimizer=AdadeltaConfig(rho=self.rho, epsilon=self.epsilon),
            checkpoint_dir=checkpoint_dir,
            threads=self.threads,
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(seed=self.seed)

    def override_policy(self) -> OverridePolicy:
        try:
            return OverridePolicy(
                engage_cte=self.override_engage_m,
                release_cte=self.override_release_m,
                horizon_ticks=self.override_horizon_ticks,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid override thresholds: {e.errors()[0]['msg']}") from e

    def track_features(self, mode: BehavioralMode) -> TrackFeatures:
        overrides: Dict[str, Any] = {"half_width": self.half_width_m}
        if mode is BehavioralMode.DIRECT:
            overrides["obstacles"] = self.obstacles
        elif mode is BehavioralMode.FURTIVE:
            overrides["foliage_fraction"] = self.foliage_fraction
        return TrackFeatures.for_mode(mode, **overrides)


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
