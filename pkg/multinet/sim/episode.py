"""
Closed-loop episodes: policies, the actuation latency queue and episode logs.
"""

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, List, Optional, Protocol, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger

from multinet.core.errors import ArtifactIOError, SimulationError
from multinet.core.models import BehavioralMode, OperationalMode, SimConfig
from multinet.data.moments import RawStream
from multinet.model.modes import prepare_images
from multinet.model.network import Z2Color
from multinet.sim.experts import Command, Expert, FollowExpert, LeadCar
from multinet.sim.render import render_stereo
from multinet.sim.track import Track
from multinet.sim.vehicle import CarState, step

if TYPE_CHECKING:
    from multinet.dagger.supervisor import Supervisor

NEUTRAL: Command = (0.5, 0.5)
CSV_COLUMNS = ("t_ms", "x", "y", "heading", "speed", "steer", "motor", "op_mode", "cte", "collision", "gap")


@dataclass(frozen=True)
class Observation:
    """What a policy sees at one tick."""

    tick: int
    t_ms: int
    car: CarState
    track: Track
    mode: BehavioralMode
    lead: Optional[LeadCar] = None
    images: Optional[npt.NDArray[np.uint8]] = None  # (2, H, W, 3) at t
    prev_images: Optional[npt.NDArray[np.uint8]] = None  # (2, H, W, 3) at t - dt


class Policy(Protocol):
    latency_exempt: bool

    def __call__(self, observation: Observation) -> Command:
        ...


class ConstantPolicy:
    """Issues the same controls every tick."""

    latency_exempt = False

    def __init__(self, steer: float, motor: float):
        self.steer = steer
        self.motor = motor

    def __call__(self, observation: Observation) -> Command:
        return self.steer, self.motor


def hard_left_policy(motor: float = 0.7) -> ConstantPolicy:
    return ConstantPolicy(0.0, motor)


class NetworkPolicy:
    """Drives from the stereo pair at t and t - dt through a trained network."""

    latency_exempt = False
    needs_images = True

    def __init__(self, model: Z2Color, mode: Optional[BehavioralMode] = None):
        self.model = model.eval()
        self.mode = mode if model.is_multinet else None

    def __call__(self, observation: Observation) -> Command:
        if observation.images is None:
            raise SimulationError("network policy needs rendered images")
        prev = observation.prev_images if observation.prev_images is not None else observation.images
        stacked = np.concatenate([observation.images, prev])[np.newaxis]
        return self.model.predict(prepare_images(stacked)[0], self.mode)


@dataclass
class EpisodeLog:
    """Per-tick record of one episode, stored column by column."""

    mode: BehavioralMode
    dt_ms: int
    t_ms: npt.NDArray[np.int64]
    x: npt.NDArray[np.float64]
    y: npt.NDArray[np.float64]
    heading: npt.NDArray[np.float64]
    speed: npt.NDArray[np.float64]
    steer: npt.NDArray[np.float64]
    motor: npt.NDArray[np.float64]
    op: npt.NDArray[np.uint8]
    cte: npt.NDArray[np.float64]
    offset: npt.NDArray[np.float64]
    collision: npt.NDArray[np.bool_]
    gap: npt.NDArray[np.float64]
    oracle_steer: npt.NDArray[np.float64]
    oracle_motor: npt.NDArray[np.float64]
    boundary_distance: npt.NDArray[np.float64]
    in_foliage: npt.NDArray[np.bool_]
    images: Optional[npt.NDArray[np.uint8]] = None
    meta: dict = field(default_factory=dict)

    @property
    def ticks(self) -> int:
        return len(self.t_ms)

    @property
    def elapsed_s(self) -> float:
        return self.ticks * self.dt_ms / 1000.0

    @property
    def correctional_ticks(self) -> int:
        return int(np.sum(self.op == OperationalMode.CORRECTIONAL.code))

    @property
    def collisions(self) -> int:
        return int(np.sum(self.collision))

    def operational_modes(self) -> List[OperationalMode]:
        return [OperationalMode.from_code(int(c)) for c in self.op]

    def runs(self) -> List[Tuple[OperationalMode, int]]:
        """Contiguous operational-mode runs as (mode, length)."""
        if self.ticks == 0:
            return []
        change = np.flatnonzero(np.diff(self.op)) + 1
        bounds = np.concatenate([[0], change, [self.ticks]])
        return [
            (OperationalMode.from_code(int(self.op[a])), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:])
        ]

    def to_streams(self) -> Tuple[RawStream, RawStream, RawStream]:
        """Oracle steer and motor streams tagged by operational mode, plus the camera stream."""
        if self.images is None:
            raise SimulationError("episode was run without rendering; no camera stream")
        steer = RawStream(self.t_ms, self.oracle_steer, self.op)
        motor = RawStream(self.t_ms, self.oracle_motor, self.op)
        camera = RawStream(self.t_ms, self.images)
        return steer, motor, camera

    def to_csv(self, path: Path) -> Path:
        """One row per tick, for external plotting."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for i in range(self.ticks):
                    writer.writerow(
                        [
                            int(self.t_ms[i]),
                            f"{self.x[i]:.6f}",
                            f"{self.y[i]:.6f}",
                            f"{self.heading[i]:.6f}",
                            f"{self.speed[i]:.6f}",
                            f"{self.steer[i]:.6f}",
                            f"{self.motor[i]:.6f}",
                            OperationalMode.from_code(int(self.op[i])).value,
                            f"{self.cte[i]:.6f}",
                            int(self.collision[i]),
                            "" if np.isnan(self.gap[i]) else f"{self.gap[i]:.6f}",
                        ]
                    )
        except OSError as e:
            raise ArtifactIOError(path, e) from e
        return path


def tick_count(duration_s: float, config: SimConfig) -> int:
    ticks = int(round(duration_s * 1000.0 / config.dt_ms))
    if ticks < 1:
        raise SimulationError(f"episode of {duration_s} s is shorter than one {config.dt_ms} ms tick")
    return ticks


def start_pose(
    track: Track,
    config: SimConfig,
    rng: Optional[np.random.Generator] = None,
    lateral: float = 0.15,
    heading: float = 0.1,
) -> CarState:
    """Start at arclength 0, optionally with a small seeded pose perturbation."""
    offset = float(rng.uniform(-lateral, lateral)) if rng is not None else 0.0
    error = float(rng.uniform(-heading, heading)) if rng is not None else 0.0
    x, y, h = track.pose_at(0.0, offset)
    return CarState(x=x, y=y, heading=h + error, speed=0.0, wheelbase=config.wheelbase)


def run_episode(
    policy: Any,
    mode: BehavioralMode,
    track: Track,
    config: SimConfig,
    duration_s: float,
    oracle: Optional[Expert] = None,
    supervisor: Optional["Supervisor"] = None,
    render_images: bool = True,
    start: Optional[CarState] = None,
) -> EpisodeLog:
    """
    Drive one episode.

    Latency-exempt policies (the experts) act on the tick they are
    queried. Any other policy's controls pass through a latency queue
    pre-filled with neutral controls. With a supervisor, the oracle takes
    over whenever the supervisor flags a correction. The oracle's command
    is logged at every tick whether or not it acts.

    Args:
        policy: Callable mapping an Observation to (steer, motor)
        mode: Behavioral mode of the episode
        track: Scene
        config: Simulator constants
        duration_s: Episode length; ticks = round(duration / dt)
        oracle: Expert whose commands are logged and used for corrections
        supervisor: Override rule; None for an unsupervised episode
        render_images: Keep rendered stereo pairs in the log
        start: Initial car state (default: centerline at arclength 0)
    """
    if oracle is None and isinstance(policy, Expert):
        oracle = policy
    if supervisor is not None and oracle is None:
        raise SimulationError("supervised episodes need an oracle")
    exempt = bool(getattr(policy, "latency_exempt", False))
    needs_images = render_images or bool(getattr(policy, "needs_images", False))

    n = tick_count(duration_s, config)
    car = start or start_pose(track, config)
    lead: Optional[LeadCar] = None
    if track.lead_car:
        gap0 = oracle.target_gap if isinstance(oracle, FollowExpert) else 2.0
        lead = LeadCar(s=float(track.wrap_s(track.project(car.x, car.y).s + gap0)))
    if supervisor is not None:
        supervisor.reset()

    # learned policies act latency_ticks after they are queried; experts and
    # corrections skip the queue, so demonstrated labels are the applied controls
    queue: deque = deque([NEUTRAL] * config.latency_ticks)
    cols = {name: np.zeros(n) for name in (
        "x", "y", "heading", "speed", "steer", "motor", "cte", "offset", "gap",
        "oracle_steer", "oracle_motor", "boundary_distance",
    )}
    op = np.zeros(n, dtype=np.uint8)
    collision = np.zeros(n, dtype=bool)
    in_foliage = np.zeros(n, dtype=bool)
    images = (
        np.zeros((n, 2, config.render_height, config.render_width, 3), dtype=np.uint8) if needs_images else None
    )
    prev_frame: Optional[npt.NDArray[np.uint8]] = None

    for k in range(n):
        t_ms = k * config.dt_ms
        proj = track.project(car.x, car.y)
        frame = None
        if images is not None:
            frame = render_stereo(car, track, config, lead.position(track) if lead is not None else None)
            images[k] = frame
        obs = Observation(
            tick=k, t_ms=t_ms, car=car, track=track, mode=mode, lead=lead,
            images=frame, prev_images=prev_frame if prev_frame is not None else frame,
        )

        raw = tuple(float(c) for c in policy(obs))
        if len(raw) != 2 or not np.all(np.isfinite(raw)):
            raise SimulationError(f"policy returned non-finite controls {raw} at tick {k}")
        command: Command = (raw[0], raw[1])
        if oracle is None:
            shadow: Command = (np.nan, np.nan)
        elif oracle is policy:
            shadow = command
        else:
            shadow = oracle(obs)

        if exempt:
            acting = command
        else:
            queue.append(command)
            acting = queue.popleft()

        if supervisor is None:
            tag = OperationalMode.EXPERT if exempt and isinstance(policy, Expert) else OperationalMode.AUTONOMOUS
        else:
            tag = supervisor.update(car, track, proj)
            if tag is OperationalMode.CORRECTIONAL:
                acting = shadow

        cols["x"][k], cols["y"][k], cols["heading"][k], cols["speed"][k] = car.x, car.y, car.heading, car.speed
        cols["steer"][k], cols["motor"][k] = acting
        cols["oracle_steer"][k], cols["oracle_motor"][k] = shadow
        cols["cte"][k] = proj.cte
        cols["offset"][k] = proj.offset
        cols["boundary_distance"][k] = track.boundary_distance(proj.offset)
        cols["gap"][k] = track.ds(lead.s, proj.s) if lead is not None else np.nan
        in_foliage[k] = track.foliage_at(proj.s) is not None
        op[k] = tag.code

        car, collision[k] = step(car, acting, track, config)
        if not car.is_finite():
            raise SimulationError(f"car state became non-finite at tick {k}")
        if lead is not None:
            lead = lead.advance(config.dt, track)
        prev_frame = frame

    log = EpisodeLog(
        mode=mode,
        dt_ms=config.dt_ms,
        t_ms=np.arange(n, dtype=np.int64) * config.dt_ms,
        op=op,
        collision=collision,
        in_foliage=in_foliage,
        images=images if render_images else None,
        meta={"track_seed": track.seed},
        **cols,
    )
    logger.debug(
        f"Episode {mode.value}: {n} ticks, {log.correctional_ticks} correctional, {log.collisions} collisions"
    )
    return log
