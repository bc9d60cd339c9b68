"""
Scripted oracle drivers for the three behavioral modes.

All experts steer by pure pursuit toward a lookahead point on a reference
line laterally offset from the centerline; they differ in the offset and
in how they choose speed. Expert controls act without actuation latency.
"""

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from multinet.core.errors import SimulationError
from multinet.core.models import BehavioralMode, SimConfig
from multinet.sim.track import Track
from multinet.sim.vehicle import CarState, motor_for_speed, steer_for_angle

if TYPE_CHECKING:
    from multinet.sim.episode import Observation

Command = Tuple[float, float]

LOOKAHEAD_BASE = 0.8
LOOKAHEAD_GAIN = 0.5

# Obstacle skirting: full offset within SKIRT_HOLD of the obstacle's edge,
# fading linearly to zero at SKIRT_FADE.
SKIRT_CLEARANCE = 0.25
SKIRT_HOLD = 1.0
SKIRT_FADE = 4.0

# Foliage hugging ramps in and out over this arclength.
FOLIAGE_RAMP = 3.0


@dataclass(frozen=True)
class LeadCar:
    """Lead car driving the centerline with a slowly varying speed."""

    s: float
    t: float = 0.0
    base_speed: float = 0.8
    amplitude: float = 0.15
    period: float = 12.0

    @property
    def speed(self) -> float:
        return self.base_speed + self.amplitude * float(np.sin(2.0 * np.pi * self.t / self.period))

    def advance(self, dt: float, track: Track) -> "LeadCar":
        s = self.s + self.speed * dt
        return replace(self, s=float(track.wrap_s(s)) if track.loop else float(s), t=self.t + dt)

    def position(self, track: Track) -> Tuple[float, float]:
        x, y, _ = track.pose_at(self.s)
        return x, y


def _signed_along(track: Track, s: float, s_ref: float) -> float:
    """s - s_ref, wrapped into [-L/2, L/2) on loops."""
    rel = s - s_ref
    if track.loop:
        rel = float(np.mod(rel + track.length / 2.0, track.length) - track.length / 2.0)
    return rel


def foliage_weight(track: Track, s: float, ramp: float = FOLIAGE_RAMP) -> Tuple[float, int]:
    """
    Hugging weight in [0, 1] and the band side at arclength s.

    The weight is 1 alongside a band and fades linearly to 0 over `ramp`
    metres before and after it.
    """
    best, side = 0.0, 0
    for band in track.foliage:
        rel = _signed_along(track, s, band.s_start)
        if 0.0 <= rel < band.length:
            weight = 1.0
        elif rel < 0.0:
            weight = 1.0 + rel / ramp
        else:
            weight = 1.0 - (rel - band.length) / ramp
        weight = float(np.clip(weight, 0.0, 1.0))
        if weight > best:
            best, side = weight, band.side
    return best, side


class Expert:
    """Pure-pursuit oracle; subclasses pick the reference offset and speed."""

    mode: BehavioralMode = BehavioralMode.DIRECT
    latency_exempt = True

    def __init__(self, config: Optional[SimConfig] = None, cruise_speed: float = 1.0, curvature_gain: float = 2.0):
        self.config = config or SimConfig()
        self.cruise_speed = cruise_speed
        self.curvature_gain = curvature_gain

    # reference line ------------------------------------------------------

    def obstacle_offset(self, track: Track, s: float) -> float:
        if not track.obstacles:
            return 0.0
        reach = SKIRT_FADE + max(ob.radius for ob in track.obstacles)
        best, best_dist = 0.0, np.inf
        for ob in track.obstacles_within(s, reach, reach):
            dist = abs(_signed_along(track, s, ob.s))
            edge = max(dist - ob.radius, 0.0)
            if edge >= SKIRT_FADE or dist >= best_dist:
                continue
            weight = 1.0 if edge <= SKIRT_HOLD else (SKIRT_FADE - edge) / (SKIRT_FADE - SKIRT_HOLD)
            target = ob.offset - np.sign(ob.offset) * (ob.radius + SKIRT_CLEARANCE)
            best, best_dist = weight * float(target), dist
        return best

    def reference_offset(self, track: Track, s: float) -> float:
        """Lateral offset of the line this expert drives at arclength s."""
        return self.obstacle_offset(track, s)

    # speed ---------------------------------------------------------------

    def target_speed(self, car: CarState, track: Track, s: float, lead: Optional[LeadCar]) -> float:
        kappa = max(abs(track.curvature_at(s + d)) for d in (0.0, 1.0, 2.0))
        return self.cruise_speed / (1.0 + self.curvature_gain * kappa)

    # control -------------------------------------------------------------

    def lookahead(self, car: CarState) -> float:
        return LOOKAHEAD_BASE + LOOKAHEAD_GAIN * abs(car.speed)

    def steer(self, car: CarState, track: Track, s: float) -> float:
        s_target = s + self.lookahead(car)
        tx, ty, _ = track.pose_at(s_target, self.reference_offset(track, s_target))
        dx, dy = tx - car.x, ty - car.y
        fx, fy = car.forward
        rx, ry = car.right
        distance = float(np.hypot(dx, dy))
        if distance < 1e-9:
            return 0.5
        alpha = float(np.arctan2(dx * rx + dy * ry, dx * fx + dy * fy))
        wheel_angle = float(np.arctan(2.0 * car.wheelbase * np.sin(alpha) / distance))
        return steer_for_angle(wheel_angle, self.config)

    def command(self, car: CarState, track: Track, lead: Optional[LeadCar] = None) -> Command:
        s = track.project(car.x, car.y).s
        return self.steer(car, track, s), motor_for_speed(self.target_speed(car, track, s, lead), self.config)

    def __call__(self, observation: "Observation") -> Command:
        return self.command(observation.car, observation.track, observation.lead)


class DirectExpert(Expert):
    """Centerline driving that skirts obstacles and slows for curves."""

    mode = BehavioralMode.DIRECT


class FurtiveExpert(Expert):
    """
    Hugs foliage-lined edges at low speed; drives like a fast direct
    expert where no foliage is in range.
    """

    mode = BehavioralMode.FURTIVE

    def __init__(
        self,
        config: Optional[SimConfig] = None,
        open_speed: float = 1.4,
        foliage_speed: float = 0.4,
        detection_range: float = 2.0,
        edge_margin: float = 0.25,
    ):
        super().__init__(config, cruise_speed=open_speed)
        self.foliage_speed = foliage_speed
        self.detection_range = detection_range
        self.edge_margin = edge_margin

    def hug_offset(self, track: Track) -> float:
        return track.half_width - self.config.car_radius - self.edge_margin

    def reference_offset(self, track: Track, s: float) -> float:
        weight, side = foliage_weight(track, s)
        if weight == 0.0:
            return self.obstacle_offset(track, s)
        return weight * side * self.hug_offset(track)

    def near_foliage(self, track: Track, s: float) -> bool:
        return foliage_weight(track, s)[0] > 0.0 or foliage_weight(track, s + self.detection_range)[0] > 0.0

    def target_speed(self, car: CarState, track: Track, s: float, lead: Optional[LeadCar]) -> float:
        if self.near_foliage(track, s):
            return self.foliage_speed
        return super().target_speed(car, track, s, lead)


class FollowExpert(Expert):
    """Centerline steering; proportional-derivative gap keeping behind the lead car."""

    mode = BehavioralMode.FOLLOW

    def __init__(self, config: Optional[SimConfig] = None, target_gap: float = 2.0, kp: float = 0.8, kd: float = 0.4):
        super().__init__(config)
        self.target_gap = target_gap
        self.kp = kp
        self.kd = kd

    def gap(self, car_s: float, lead: LeadCar, track: Track) -> float:
        return track.ds(lead.s, car_s)

    def target_speed(self, car: CarState, track: Track, s: float, lead: Optional[LeadCar]) -> float:
        if lead is None:
            raise SimulationError("the follow expert needs a lead car")
        error = self.gap(s, lead, track) - self.target_gap
        error_rate = lead.speed - car.speed
        v = lead.speed + self.kp * error + self.kd * error_rate
        return float(np.clip(v, -self.config.v_max, self.config.v_max))


def expert_for(mode: BehavioralMode, config: Optional[SimConfig] = None) -> Expert:
    return {
        BehavioralMode.DIRECT: DirectExpert,
        BehavioralMode.FOLLOW: FollowExpert,
        BehavioralMode.FURTIVE: FurtiveExpert,
    }[mode](config)


def expert_direct(car: CarState, track: Track, config: Optional[SimConfig] = None) -> Command:
    return DirectExpert(config).command(car, track)


def expert_follow(car: CarState, lead: Optional[LeadCar], track: Track, config: Optional[SimConfig] = None) -> Command:
    if lead is None:
        raise SimulationError("the follow expert needs a lead car")
    return FollowExpert(config).command(car, track, lead)


def expert_furtive(car: CarState, track: Track, config: Optional[SimConfig] = None) -> Command:
    return FurtiveExpert(config).command(car, track)
