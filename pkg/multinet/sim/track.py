"""
Track geometry: centerline, corridor, obstacles and boundary foliage.

World frame: x forward/east, y down (screen-like). Headings grow
clockwise on screen, so a positive wheel angle turns right. The left
normal of heading h is (sin h, -cos h); signed lateral offsets are
positive to the left of the centerline.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger

from multinet.core.errors import SimulationError
from multinet.core.models import TrackFeatures

Array = npt.NDArray[np.float64]

# Obstacles keep clear of the start line and of foliage bands.
_START_CLEARANCE = 8.0
_END_CLEARANCE = 3.0
_FOLIAGE_CLEARANCE = 2.0
_PLACEMENT_ATTEMPTS = 2000

# Lateral obstacle offset range as a fraction of the half-width.
_OBSTACLE_OFFSET = (0.35, 0.55)


def wrap_angle(a: float) -> float:
    return float(np.arctan2(np.sin(a), np.cos(a)))


def left_normal(heading: float) -> Tuple[float, float]:
    return float(np.sin(heading)), float(-np.cos(heading))


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float
    s: float
    offset: float


@dataclass(frozen=True)
class FoliageBand:
    side: int  # +1 left, -1 right
    s_start: float
    length: float
    depth: float


@dataclass(frozen=True)
class Projection:
    s: float
    offset: float
    heading: float

    @property
    def cte(self) -> float:
        return abs(self.offset)


class Track:
    """Polyline centerline with a corridor of constant half-width."""

    def __init__(
        self,
        points: Array,
        half_width: float,
        loop: bool = True,
        obstacles: Sequence[Obstacle] = (),
        foliage: Sequence[FoliageBand] = (),
        lead_car: bool = False,
        seed: Optional[int] = None,
    ):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or len(self.points) < 2:
            raise SimulationError(f"track needs at least two 2D waypoints, got shape {self.points.shape}")
        self.half_width = float(half_width)
        self.loop = loop
        self.obstacles: List[Obstacle] = list(obstacles)
        self.foliage: List[FoliageBand] = list(foliage)
        self.lead_car = lead_car
        self.seed = seed

        ends = np.roll(self.points, -1, axis=0) if loop else self.points[1:]
        starts = self.points if loop else self.points[:-1]
        self._a = starts
        self._ab = ends - starts
        self._seg_len = np.hypot(self._ab[:, 0], self._ab[:, 1])
        if np.any(self._seg_len <= 0.0):
            raise SimulationError("track has repeated waypoints")
        self._seg_s = np.concatenate([[0.0], np.cumsum(self._seg_len)[:-1]])
        self._seg_heading = np.arctan2(self._ab[:, 1], self._ab[:, 0])
        self.length = float(np.sum(self._seg_len))

    # ------------------------------------------------------------------
    # geometry queries
    # ------------------------------------------------------------------

    @property
    def arclength(self) -> Array:
        """Arclength of each waypoint."""
        if self.loop:
            return self._seg_s.copy()
        return np.concatenate([self._seg_s, [self.length]])

    @property
    def max_spacing(self) -> float:
        return float(self._seg_len.max())

    def wrap_s(self, s: npt.ArrayLike) -> Array:
        s = np.asarray(s, dtype=np.float64)
        return np.mod(s, self.length) if self.loop else np.clip(s, 0.0, self.length)

    def ds(self, s_to: float, s_from: float) -> float:
        """Forward arclength from s_from to s_to (modulo the loop)."""
        delta = s_to - s_from
        return float(np.mod(delta, self.length)) if self.loop else float(delta)

    def point_at(self, s: npt.ArrayLike) -> Tuple[Array, Array]:
        """Centerline points and headings at arclength(s)."""
        s = self.wrap_s(s)
        i = np.clip(np.searchsorted(self._seg_s, s, side="right") - 1, 0, len(self._seg_s) - 1)
        t = (s - self._seg_s[i]) / self._seg_len[i]
        xy = self._a[i] + t[..., np.newaxis] * self._ab[i]
        return xy, self._seg_heading[i]

    def pose_at(self, s: float, offset: float = 0.0) -> Tuple[float, float, float]:
        xy, heading = self.point_at(s)
        lx, ly = left_normal(float(heading))
        return float(xy[0] + offset * lx), float(xy[1] + offset * ly), float(heading)

    def _project(self, p: Array, segments: npt.NDArray[np.int64]) -> Tuple[Array, Array, npt.NDArray[np.int64]]:
        a = self._a[segments]
        ab = self._ab[segments]
        rel = p[:, np.newaxis, :] - a[np.newaxis]
        t = np.clip(np.einsum("kmj,mj->km", rel, ab) / (self._seg_len[segments] ** 2), 0.0, 1.0)
        q = a[np.newaxis] + t[..., np.newaxis] * ab[np.newaxis]
        dist2 = np.sum((p[:, np.newaxis, :] - q) ** 2, axis=-1)
        best = np.argmin(dist2, axis=1)
        rows = np.arange(len(p))
        seg = segments[best]
        heading = self._seg_heading[seg]
        diff = p - q[rows, best]
        offset = diff[:, 0] * np.sin(heading) - diff[:, 1] * np.cos(heading)
        s = self._seg_s[seg] + t[rows, best] * self._seg_len[seg]
        return s, offset, seg

    def project(self, x: float, y: float) -> Projection:
        """Nearest centerline point; ties go to the lowest segment."""
        s, offset, seg = self._project(np.array([[x, y]]), np.arange(len(self._seg_s)))
        return Projection(s=float(s[0]), offset=float(offset[0]), heading=float(self._seg_heading[seg[0]]))

    def window_segments(self, s_center: float, behind: float, ahead: float) -> npt.NDArray[np.int64]:
        rel = self._seg_s - s_center
        if self.loop:
            rel = np.mod(rel + behind, self.length) - behind
        mask = (rel + self._seg_len >= -behind) & (rel <= ahead)
        segments = np.flatnonzero(mask)
        return segments if len(segments) else np.arange(len(self._seg_s))

    def project_many(self, points: Array, s_center: float, behind: float, ahead: float) -> Tuple[Array, Array]:
        """Project many points onto the part of the centerline near s_center."""
        segments = self.window_segments(s_center, behind, ahead)
        s, offset, _ = self._project(np.asarray(points, dtype=np.float64).reshape(-1, 2), segments)
        return s, offset

    def curvature_at(self, s: float, ds: float = 0.5) -> float:
        _, h = self.point_at(np.array([s - ds, s + ds]))
        return wrap_angle(float(h[1] - h[0])) / (2.0 * ds)

    # ------------------------------------------------------------------
    # scene queries
    # ------------------------------------------------------------------

    def foliage_at(self, s: float) -> Optional[FoliageBand]:
        for band in self.foliage:
            if 0.0 <= self.ds(s, band.s_start) < band.length:
                return band
        return None

    def foliage_ahead(self, s: float, distance: float) -> Optional[FoliageBand]:
        """First foliage band overlapping [s, s + distance]."""
        for step in np.arange(0.0, distance + 1e-9, 0.25):
            band = self.foliage_at(float(s + step))
            if band is not None:
                return band
        return None

    def obstacles_within(self, s: float, behind: float, ahead: float) -> List[Obstacle]:
        found = []
        for ob in self.obstacles:
            rel = self.ds(ob.s, s)
            if self.loop and rel > self.length - behind:
                rel -= self.length
            if -behind <= rel <= ahead:
                found.append(ob)
        return found

    def in_collision(self, x: float, y: float, car_radius: float) -> bool:
        proj = self.project(x, y)
        if abs(proj.offset) > self.half_width - car_radius:
            return True
        for ob in self.obstacles:
            if np.hypot(x - ob.x, y - ob.y) < ob.radius + car_radius:
                return True
        return False

    def boundary_distance(self, offset: float) -> float:
        return self.half_width - abs(offset)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Track):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and self.half_width == other.half_width
            and self.loop == other.loop
            and self.obstacles == other.obstacles
            and self.foliage == other.foliage
            and self.lead_car == other.lead_car
        )

    def __repr__(self) -> str:
        return (
            f"Track(length={self.length:.1f}m, half_width={self.half_width}, loop={self.loop}, "
            f"obstacles={len(self.obstacles)}, foliage={len(self.foliage)}, lead_car={self.lead_car})"
        )


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------

def _resample(dense: Array, closed: bool, spacing: float) -> Array:
    pts = np.vstack([dense, dense[:1]]) if closed else dense
    seg = np.hypot(*np.diff(pts, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    count = max(int(round(total / spacing)), 3)
    s = np.arange(count) * (total / count) if closed else np.linspace(0.0, total, count + 1)
    return np.column_stack([np.interp(s, cum, pts[:, 0]), np.interp(s, cum, pts[:, 1])])


def _place_foliage(rng: np.random.Generator, length: float, features: TrackFeatures, loop: bool) -> List[FoliageBand]:
    if features.foliage_fraction <= 0.0:
        return []
    band_len = features.foliage_fraction * length / features.foliage_bands
    period = length / features.foliage_bands
    phase = rng.uniform(_START_CLEARANCE, max(_START_CLEARANCE, period - band_len)) if loop else _START_CLEARANCE
    bands = []
    for i in range(features.foliage_bands):
        start = phase + i * period
        if not loop:
            start = min(start, length - band_len)
        side = 1 if rng.uniform() < 0.5 else -1
        bands.append(
            FoliageBand(side=side, s_start=float(start % length), length=float(band_len), depth=features.foliage_depth)
        )
    return bands


def _place_obstacles(
    rng: np.random.Generator, track: Track, features: TrackFeatures, foliage: Sequence[FoliageBand]
) -> List[Obstacle]:
    if features.obstacles == 0:
        return []
    lo, hi = _START_CLEARANCE, track.length - _END_CLEARANCE
    if hi <= lo:
        raise SimulationError(f"track of {track.length:.1f} m is too short for obstacles")
    if features.obstacles * features.obstacle_spacing > hi - lo + features.obstacle_spacing:
        raise SimulationError(
            f"{features.obstacles} obstacles at {features.obstacle_spacing} m spacing do not fit "
            f"on a {track.length:.1f} m track"
        )
    hw = features.half_width
    placed: List[Obstacle] = []
    for _ in range(_PLACEMENT_ATTEMPTS):
        if len(placed) == features.obstacles:
            break
        s = float(rng.uniform(lo, hi))
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        offset = side * float(rng.uniform(*_OBSTACLE_OFFSET)) * hw
        radius = float(rng.uniform(*features.obstacle_radius))
        if any(min(track.ds(s, o.s), track.ds(o.s, s)) < features.obstacle_spacing for o in placed):
            continue
        if any(
            0.0 <= track.ds(s, b.s_start) <= b.length + _FOLIAGE_CLEARANCE
            or track.ds(b.s_start, s) <= _FOLIAGE_CLEARANCE
            for b in foliage
        ):
            continue
        x, y, _ = track.pose_at(s, offset)
        placed.append(Obstacle(x=x, y=y, radius=radius, s=s, offset=offset))
    if len(placed) < features.obstacles:
        raise SimulationError(f"could place only {len(placed)} of {features.obstacles} obstacles")
    return sorted(placed, key=lambda o: o.s)


def generate_track(
    seed: int, length_m: float, features: Optional[TrackFeatures] = None, car_width: float = 0.2
) -> Track:
    """
    Seeded closed loop with bounded curvature.

    The loop is a perturbed circle r(phi) = R0 (1 + a2 cos(2 phi + p2) +
    a3 cos(3 phi + p3)) scaled to the requested length and resampled at
    the waypoint spacing.
    """
    features = features or TrackFeatures()
    if length_m < 20.0:
        raise SimulationError(f"track length must be at least 20 m, got {length_m}")
    if features.half_width <= car_width:
        raise SimulationError(f"half-width {features.half_width} m must exceed the car width {car_width} m")
    if features.obstacle_radius[1] >= features.half_width:
        raise SimulationError(
            f"obstacle radius {features.obstacle_radius[1]} m blocks a {features.half_width} m half-width corridor"
        )

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    a2, a3 = rng.uniform(0.0, 0.08), rng.uniform(0.0, 0.03)
    p2, p3 = rng.uniform(0.0, 2 * np.pi, size=2)
    phi = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    r = 1.0 + a2 * np.cos(2 * phi + p2) + a3 * np.cos(3 * phi + p3)
    dense = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    perimeter = float(np.sum(np.hypot(*np.diff(np.vstack([dense, dense[:1]]), axis=0).T)))
    dense *= length_m / perimeter
    # start at the origin
    dense -= dense[0]

    points = _resample(dense, closed=True, spacing=features.waypoint_spacing)
    base = Track(points, features.half_width, loop=True, lead_car=features.lead_car, seed=seed)
    foliage = _place_foliage(rng, base.length, features, loop=True)
    obstacles = _place_obstacles(rng, base, features, foliage)
    track = Track(points, features.half_width, True, obstacles, foliage, features.lead_car, seed)

    problems = validate_track(track, car_width)
    if problems:
        raise SimulationError(f"generated track is infeasible: {'; '.join(problems)}")
    logger.debug(f"Generated {track!r} from seed {seed}")
    return track


def straight_track(
    length_m: float = 200.0,
    half_width_m: float = 1.0,
    spacing: float = 0.5,
    obstacles: Sequence[Tuple[float, float, float]] = (),
    foliage: Sequence[FoliageBand] = (),
    lead_car: bool = False,
) -> Track:
    """
    Open straight track along +x starting at the origin.

    Args:
        obstacles: (s, offset, radius) triples
    """
    count = max(int(round(length_m / spacing)), 1)
    xs = np.linspace(0.0, length_m, count + 1)
    points = np.column_stack([xs, np.zeros_like(xs)])
    placed = [
        Obstacle(x=float(s), y=float(-offset), radius=float(radius), s=float(s), offset=float(offset))
        for s, offset, radius in obstacles
    ]
    return Track(points, half_width_m, loop=False, obstacles=placed, foliage=foliage, lead_car=lead_car)


def validate_track(track: Track, car_width: float = 0.2, margin: float = 0.1, max_spacing: float = 1.0) -> List[str]:
    """
    Sweep the arclength and report every feasibility violation.

    The sweep works on the car center, with the corridor shrunk and every
    obstacle grown by the car radius as in `Track.in_collision`. Wherever
    an obstacle narrows the corridor, the widest free interval for the
    center must be at least margin wide.
    """
    problems = []
    if track.half_width <= car_width:
        problems.append(f"half-width {track.half_width} m does not exceed car width {car_width} m")
    if track.max_spacing > max_spacing:
        problems.append(f"waypoint spacing {track.max_spacing:.3f} m exceeds {max_spacing} m")

    car_radius = car_width / 2.0
    free = track.half_width - car_radius
    for ob in track.obstacles:
        reach = ob.radius + car_radius
        for s in np.linspace(ob.s - reach, ob.s + reach, 21):
            blocked = []
            for other in track.obstacles_within(float(s), 2.0, 2.0):
                along = track.ds(float(s), other.s)
                if along > track.length / 2:
                    along -= track.length
                grown = other.radius + car_radius
                if abs(along) < grown:
                    half_chord = float(np.sqrt(grown ** 2 - along ** 2))
                    blocked.append((other.offset - half_chord, other.offset + half_chord))
            gap = _widest_gap(-free, free, blocked)
            if gap < margin:
                problems.append(f"passable gap {gap:.3f} m < {margin:.3f} m for the car center at s={float(s):.2f}")
                break
    return problems


def _widest_gap(lo: float, hi: float, blocked: Sequence[Tuple[float, float]]) -> float:
    cursor, widest = lo, 0.0
    for start, end in sorted(blocked):
        if start > cursor:
            widest = max(widest, min(start, hi) - cursor)
        cursor = max(cursor, end)
        if cursor >= hi:
            break
    return max(widest, hi - cursor)
