"""
Rule-based expert override for supervised autonomous driving.
"""

from typing import Any, Optional

from multinet.core.models import OperationalMode, OverridePolicy, SimConfig
from multinet.sim.episode import EpisodeLog, run_episode
from multinet.sim.experts import Expert
from multinet.sim.track import Projection, Track
from multinet.sim.vehicle import CarState


class Supervisor:
    """
    Decides each tick whether the oracle takes over.

    The tracking error is the car's lateral distance from the oracle's
    reference line. A correction starts when that error exceeds the engage
    threshold or a straight-line projection of the car collides within the
    horizon, and ends once the error falls below the release threshold
    with no collision predicted. A mode is held for at least
    min_run_ticks before it may switch.
    """

    def __init__(self, policy: OverridePolicy, config: SimConfig, oracle: Optional[Expert] = None):
        self.policy = policy
        self.config = config
        self.oracle = oracle
        self.mode = OperationalMode.AUTONOMOUS
        self.run_length = 0

    def reset(self) -> None:
        self.mode = OperationalMode.AUTONOMOUS
        self.run_length = 0

    def tracking_error(self, car: CarState, track: Track, proj: Projection) -> float:
        reference = self.oracle.reference_offset(track, proj.s) if self.oracle is not None else 0.0
        return abs(proj.offset - reference)

    def predicts_collision(self, car: CarState, track: Track) -> bool:
        if self.policy.horizon_ticks == 0 or car.speed == 0.0:
            return False
        fx, fy = car.forward
        step = car.speed * self.config.dt
        for j in range(1, self.policy.horizon_ticks + 1):
            if track.in_collision(car.x + fx * step * j, car.y + fy * step * j, self.config.car_radius):
                return True
        return False

    def update(self, car: CarState, track: Track, proj: Optional[Projection] = None) -> OperationalMode:
        """Operational mode for the current tick."""
        proj = proj or track.project(car.x, car.y)
        if self.run_length >= self.policy.min_run_ticks:
            error = self.tracking_error(car, track, proj)
            if self.mode is OperationalMode.AUTONOMOUS:
                if error > self.policy.engage_cte or self.predicts_collision(car, track):
                    self.mode, self.run_length = OperationalMode.CORRECTIONAL, 1
                    return self.mode
            elif error < self.policy.release_cte and not self.predicts_collision(car, track):
                self.mode, self.run_length = OperationalMode.AUTONOMOUS, 1
                return self.mode
        self.run_length += 1
        return self.mode


def supervise(
    policy: Any,
    oracle: Expert,
    override: OverridePolicy,
    track: Track,
    config: SimConfig,
    duration_s: float,
    render_images: bool = False,
    start: Optional[CarState] = None,
) -> EpisodeLog:
    """Drive `policy` with the oracle ready to take over; every tick is tagged."""
    return run_episode(
        policy,
        oracle.mode,
        track,
        config,
        duration_s,
        oracle=oracle,
        supervisor=Supervisor(override, config, oracle),
        render_images=render_images,
        start=start,
    )
