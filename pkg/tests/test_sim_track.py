"""
Tests for track generation, projection and feasibility.
"""

import unittest

import numpy as np

from multinet.core.errors import SimulationError
from multinet.core.models import TrackFeatures
from multinet.sim.track import FoliageBand, generate_track, straight_track, validate_track


class TestGenerateTrack(unittest.TestCase):
    """Test cases for seeded loop generation."""

    def test_deterministic(self):
        """Test that a seed fixes the whole scene."""
        features = TrackFeatures(obstacles=3, foliage_fraction=0.2)
        a = generate_track(7, 120.0, features)
        b = generate_track(7, 120.0, features)
        c = generate_track(8, 120.0, features)
        self.assertEqual(a, b)
        self.assertNotEqual(a, c)

    def test_closed_loop_length(self):
        """Test that the loop has the requested length and waypoint spacing."""
        track = generate_track(1, 100.0)
        self.assertTrue(track.loop)
        self.assertAlmostEqual(track.length, 100.0, delta=0.5)
        self.assertLessEqual(track.max_spacing, 1.0)
        np.testing.assert_allclose(track.points[0], [0.0, 0.0], atol=1e-9)

    def test_zero_obstacles(self):
        """Test that no obstacles are placed when none are requested."""
        self.assertEqual(generate_track(3, 80.0, TrackFeatures(obstacles=0)).obstacles, [])

    def test_obstacle_placement(self):
        """Test obstacle count, spacing and lateral range."""
        features = TrackFeatures(obstacles=5, obstacle_spacing=10.0)
        track = generate_track(11, 200.0, features)
        self.assertEqual(len(track.obstacles), 5)
        for a, b in zip(track.obstacles, track.obstacles[1:]):
            self.assertGreaterEqual(b.s - a.s, 10.0)
        for ob in track.obstacles:
            self.assertLess(abs(ob.offset), features.half_width)
            self.assertGreaterEqual(ob.s, 8.0)
        self.assertEqual(validate_track(track), [])

    def test_infeasible_radius(self):
        """Test that an obstacle as wide as the corridor is refused."""
        with self.assertRaises(SimulationError):
            generate_track(0, 100.0, TrackFeatures(half_width=0.3, obstacles=1, obstacle_radius=(0.2, 0.3)))

    def test_too_many_obstacles(self):
        """Test that obstacles that cannot fit at the spacing are refused."""
        with self.assertRaises(SimulationError):
            generate_track(0, 100.0, TrackFeatures(obstacles=20, obstacle_spacing=10.0))

    def test_too_short(self):
        """Test the minimum track length."""
        with self.assertRaises(SimulationError):
            generate_track(0, 10.0)

    def test_narrow_corridor(self):
        """Test that a corridor narrower than the car is refused."""
        with self.assertRaises(SimulationError):
            generate_track(0, 100.0, TrackFeatures(half_width=0.15), car_width=0.2)


class TestTrackQueries(unittest.TestCase):
    """Test cases for geometry queries on a straight track."""

    def setUp(self):
        """Set up test fixtures."""
        self.track = straight_track(
            50.0,
            obstacles=[(20.0, 0.5, 0.2)],
            foliage=[FoliageBand(side=1, s_start=10.0, length=5.0, depth=0.6)],
        )

    def test_projection_sign(self):
        """Test that offsets are positive to the left of the direction of travel."""
        left = self.track.project(5.0, -0.3)
        self.assertAlmostEqual(left.s, 5.0)
        self.assertAlmostEqual(left.offset, 0.3)
        self.assertAlmostEqual(left.cte, 0.3)
        self.assertAlmostEqual(self.track.project(5.0, 0.4).offset, -0.4)

    def test_pose_at(self):
        """Test centerline poses with a lateral offset."""
        x, y, heading = self.track.pose_at(10.0, 0.5)
        self.assertAlmostEqual(x, 10.0)
        self.assertAlmostEqual(y, -0.5)
        self.assertAlmostEqual(heading, 0.0)

    def test_obstacle_position(self):
        """Test that a left obstacle sits at negative y."""
        ob = self.track.obstacles[0]
        self.assertEqual((ob.x, ob.y), (20.0, -0.5))

    def test_collision(self):
        """Test obstacle and boundary contact."""
        self.assertTrue(self.track.in_collision(20.0, -0.5, 0.1))
        self.assertTrue(self.track.in_collision(5.0, 0.95, 0.1))
        self.assertFalse(self.track.in_collision(5.0, 0.0, 0.1))
        self.assertFalse(self.track.in_collision(20.0, 0.2, 0.1))

    def test_foliage_lookup(self):
        """Test band membership along the arclength."""
        self.assertIsNotNone(self.track.foliage_at(12.0))
        self.assertIsNone(self.track.foliage_at(16.0))
        self.assertIsNotNone(self.track.foliage_ahead(8.0, 2.5))
        self.assertIsNone(self.track.foliage_ahead(0.0, 2.0))

    def test_obstacles_within(self):
        """Test the arclength window search."""
        self.assertEqual(len(self.track.obstacles_within(18.0, 1.0, 3.0)), 1)
        self.assertEqual(self.track.obstacles_within(10.0, 1.0, 3.0), [])


class TestValidateTrack(unittest.TestCase):
    """Test cases for the feasibility sweep."""

    def test_passable(self):
        """Test that a small side obstacle leaves a wide gap."""
        self.assertEqual(validate_track(straight_track(30.0, obstacles=[(10.0, 0.5, 0.2)])), [])

    def test_blocked(self):
        """Test that a centered obstacle nearly as wide as the corridor is reported."""
        problems = validate_track(straight_track(30.0, obstacles=[(10.0, 0.0, 0.9)]))
        self.assertTrue(problems)
        self.assertIn("passable gap", problems[0])

    def test_staggered_pair_uses_grown_obstacles(self):
        """Test that the sweep grows obstacles by the car radius rather than padding the raw chords."""
        # between the two obstacles the raw chords leave a 0.53 m gap, but
        # the car center keeps only about 0.06 m once both disks grow by 0.2 m
        pair = straight_track(30.0, obstacles=[(10.0, 0.49, 0.3), (10.4, -0.49, 0.3)])
        problems = validate_track(pair, car_width=0.4)
        self.assertTrue(problems)
        self.assertIn("for the car center", problems[0])
        self.assertEqual(validate_track(pair, car_width=0.2), [])

    def test_validated_track_has_free_center_path(self):
        """Test that every swept station of a validated track has a collision-free lateral position."""
        pair = straight_track(30.0, obstacles=[(10.0, 0.49, 0.3), (10.4, -0.49, 0.3)])
        self.assertEqual(validate_track(pair, car_width=0.2), [])
        offsets = np.linspace(-0.9, 0.9, 181)
        for s in np.linspace(9.6, 10.8, 25):
            free = [o for o in offsets if not pair.in_collision(*pair.pose_at(float(s), float(o))[:2], 0.1)]
            self.assertTrue(free, f"no free lateral position at s={s:.2f}")

    def test_sparse_waypoints(self):
        """Test that waypoints more than a metre apart are reported."""
        self.assertTrue(validate_track(straight_track(30.0, spacing=2.0)))


if __name__ == "__main__":
    unittest.main()
