"""
Flat-color pseudo-stereo camera.

Ground pixels are cast onto the ground plane from a pinhole camera at
camera_height; obstacles and the lead car are upright cylinders found by
casting each column's ray in the plane.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from multinet.core.models import Eye, SimConfig
from multinet.sim.track import Track
from multinet.sim.vehicle import CarState

Image = npt.NDArray[np.uint8]

SKY = (135, 206, 235)
PATH = (128, 128, 128)
GROUND = (160, 130, 90)
FOLIAGE = (0, 100, 0)
OBSTACLE = (200, 40, 40)
LEAD_CAR = (30, 60, 200)

OBSTACLE_HEIGHT = 0.5
LEAD_CAR_HEIGHT = 0.15
LEAD_CAR_RADIUS = 0.12

_WINDOW_BEHIND = 2.0


def focal_length(config: SimConfig) -> float:
    return (config.render_width / 2.0) / float(np.tan(np.radians(config.camera_hfov_deg) / 2.0))


def eye_position(car: CarState, eye: Eye, config: SimConfig) -> Tuple[float, float]:
    side = 0.5 if eye is Eye.LEFT else -0.5
    lx, ly = np.sin(car.heading), -np.cos(car.heading)
    return car.x + side * config.camera_baseline * lx, car.y + side * config.camera_baseline * ly


def _cylinder_hits(
    origin: Tuple[float, float],
    fwd: Tuple[float, float],
    right: Tuple[float, float],
    u: npt.NDArray[np.float64],
    f: float,
    cylinders: Sequence[Tuple[float, float, float]],
) -> npt.NDArray[np.float64]:
    """Forward depth of the nearest cylinder along each column ray (inf if none)."""
    depth = np.full(len(u), np.inf)
    # ray direction per column, scaled so its forward component is 1
    dx = fwd[0] + (u / f) * right[0]
    dy = fwd[1] + (u / f) * right[1]
    a = dx * dx + dy * dy
    for cx, cy, radius in cylinders:
        ox, oy = origin[0] - cx, origin[1] - cy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - radius * radius
        disc = b * b - 4.0 * a * c
        hit = disc >= 0.0
        t = np.where(hit, (-b - np.sqrt(np.where(hit, disc, 0.0))) / (2.0 * a), np.inf)
        t = np.where(t > 1e-6, t, np.inf)
        depth = np.minimum(depth, t)
    return depth


def render(
    car: CarState,
    track: Track,
    eye: Eye,
    config: SimConfig,
    lead: Optional[Tuple[float, float]] = None,
) -> Image:
    """
    Render one eye as an HxWx3 uint8 image.

    Args:
        car: Pose of the car carrying the camera
        track: Scene geometry
        eye: Left or right camera, offset half the baseline along the left normal
        config: Camera and render constants
        lead: Lead-car position when one is present
    """
    h, w = config.render_height, config.render_width
    f = focal_length(config)
    hc = config.camera_height
    ex, ey = eye_position(car, eye, config)
    fwd = (float(np.cos(car.heading)), float(np.sin(car.heading)))
    right = (float(-np.sin(car.heading)), float(np.cos(car.heading)))

    v = np.arange(h) + 0.5 - h / 2.0
    u = np.arange(w) + 0.5 - w / 2.0
    image = np.empty((h, w, 3), dtype=np.uint8)
    image[:] = SKY

    # ground plane
    ground_rows = np.flatnonzero(v > 0.0)
    depth_ground = np.full((h, w), np.inf)
    if len(ground_rows):
        z = hc * f / v[ground_rows]
        zz = np.repeat(z[:, np.newaxis], w, axis=1)
        lateral = zz * u[np.newaxis, :] / f
        gx = ex + zz * fwd[0] + lateral * right[0]
        gy = ey + zz * fwd[1] + lateral * right[1]
        car_s = track.project(car.x, car.y).s
        s, offset = track.project_many(
            np.column_stack([gx.ravel(), gy.ravel()]), car_s, _WINDOW_BEHIND, config.view_distance
        )
        colors = np.empty((len(s), 3), dtype=np.uint8)
        colors[:] = GROUND
        on_path = np.abs(offset) <= track.half_width
        colors[on_path] = PATH
        for band in track.foliage:
            rel = np.mod(s - band.s_start, track.length) if track.loop else s - band.s_start
            lateral_out = band.side * offset - track.half_width
            in_band = (rel >= 0.0) & (rel < band.length) & (lateral_out > 0.0) & (lateral_out <= band.depth)
            colors[in_band] = FOLIAGE
        image[ground_rows] = colors.reshape(len(ground_rows), w, 3)
        depth_ground[ground_rows] = zz

    # upright objects, nearest first per column
    for cylinders, height, color in (
        (
            [(o.x, o.y, o.radius) for o in track.obstacles
             if np.hypot(o.x - ex, o.y - ey) <= config.view_distance + o.radius],
            OBSTACLE_HEIGHT,
            OBSTACLE,
        ),
        ([(lead[0], lead[1], LEAD_CAR_RADIUS)] if lead is not None else [], LEAD_CAR_HEIGHT, LEAD_CAR),
    ):
        if not cylinders:
            continue
        depth = _cylinder_hits((ex, ey), fwd, right, u, f, cylinders)
        cols = np.flatnonzero(np.isfinite(depth))
        for c in cols:
            z_obj = depth[c]
            v_top = (hc - height) * f / z_obj
            rows = (v >= v_top) & (depth_ground[:, c] > z_obj)
            image[rows, c] = color
            depth_ground[rows, c] = z_obj
    return image


def render_stereo(
    car: CarState, track: Track, config: SimConfig, lead: Optional[Tuple[float, float]] = None
) -> Image:
    """(2, H, W, 3) left and right images."""
    return np.stack([render(car, track, Eye.LEFT, config, lead), render(car, track, Eye.RIGHT, config, lead)])
