"""
Kinematic bicycle car with a first-order speed lag.
"""

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from multinet.core.models import SimConfig
from multinet.sim.track import Track, wrap_angle


@dataclass(frozen=True)
class CarState:
    x: float
    y: float
    heading: float
    speed: float = 0.0
    wheelbase: float = 0.26

    @property
    def forward(self) -> Tuple[float, float]:
        return float(np.cos(self.heading)), float(np.sin(self.heading))

    @property
    def right(self) -> Tuple[float, float]:
        return float(-np.sin(self.heading)), float(np.cos(self.heading))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite([self.x, self.y, self.heading, self.speed])))


def control_maps(steer: float, motor: float, config: SimConfig) -> Tuple[float, float]:
    """
    Map normalized controls to (wheel angle rad, target speed m/s).

    steer 0.5 is straight and 1.0 the full right lock; motor 0.5 is stop,
    0.0 full reverse and 1.0 full forward.
    """
    steer = float(np.clip(steer, 0.0, 1.0))
    motor = float(np.clip(motor, 0.0, 1.0))
    return (2.0 * steer - 1.0) * config.max_wheel_angle, (2.0 * motor - 1.0) * config.v_max


def steer_for_angle(wheel_angle: float, config: SimConfig) -> float:
    return float(np.clip(0.5 + wheel_angle / (2.0 * config.max_wheel_angle), 0.0, 1.0))


def motor_for_speed(speed: float, config: SimConfig) -> float:
    return float(np.clip(0.5 + speed / (2.0 * config.v_max), 0.0, 1.0))


def advance(car: CarState, wheel_angle: float, target_speed: float, config: SimConfig) -> CarState:
    """
    One tick of motion.

    Speed relaxes toward the target with time constant tau, then the pose
    follows the exact circular arc for the new speed and wheel angle.
    """
    dt = config.dt
    alpha = 1.0 - np.exp(-dt / config.speed_time_constant)
    v = car.speed + (target_speed - car.speed) * alpha
    v = float(np.clip(v, -config.v_max, config.v_max))
    omega = v * np.tan(wheel_angle) / car.wheelbase
    h1 = car.heading
    if abs(omega * dt) < 1e-12:
        x = car.x + v * np.cos(h1) * dt
        y = car.y + v * np.sin(h1) * dt
        h2 = h1
    else:
        h2 = h1 + omega * dt
        x = car.x + (v / omega) * (np.sin(h2) - np.sin(h1))
        y = car.y + (v / omega) * (np.cos(h1) - np.cos(h2))
    return replace(car, x=float(x), y=float(y), heading=wrap_angle(h2), speed=v)


def step(car: CarState, controls: Tuple[float, float], track: Track, config: SimConfig) -> Tuple[CarState, bool]:
    """Advance the car under (steer, motor); returns the new state and a collision flag."""
    wheel_angle, target_speed = control_maps(controls[0], controls[1], config)
    nxt = advance(car, wheel_angle, target_speed, config)
    return nxt, track.in_collision(nxt.x, nxt.y, config.car_radius)
