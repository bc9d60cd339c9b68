"""
Tests for the expert override rule.
"""

import unittest

import numpy as np

from multinet.core.models import BehavioralMode, OperationalMode, OverridePolicy, SimConfig
from multinet.dagger.supervisor import Supervisor, supervise
from multinet.sim.episode import hard_left_policy
from multinet.sim.experts import DirectExpert
from multinet.sim.track import straight_track
from multinet.sim.vehicle import CarState


class TestSupervisor(unittest.TestCase):
    """Test cases for engage and release hysteresis."""

    def setUp(self):
        """Set up test fixtures."""
        self.config = SimConfig()
        self.track = straight_track(50.0)
        self.supervisor = Supervisor(OverridePolicy(), self.config, DirectExpert(self.config))

    def car_at(self, offset):
        return CarState(x=10.0, y=-offset, heading=0.0, speed=0.0)

    def test_hysteresis(self):
        """Test engage above 0.45, hold between the thresholds and release below 0.25."""
        modes = [self.supervisor.update(self.car_at(o), self.track) for o in (0.5, 0.5, 0.5, 0.3, 0.3, 0.2)]
        A, C = OperationalMode.AUTONOMOUS, OperationalMode.CORRECTIONAL
        self.assertEqual(modes, [A, A, C, C, C, A])

    def test_minimum_run(self):
        """Test that a fresh correction is held for the minimum run even when the error vanishes."""
        for _ in range(2):
            self.supervisor.update(self.car_at(0.0), self.track)
        self.assertIs(self.supervisor.update(self.car_at(0.6), self.track), OperationalMode.CORRECTIONAL)
        self.assertIs(self.supervisor.update(self.car_at(0.0), self.track), OperationalMode.CORRECTIONAL)
        self.assertIs(self.supervisor.update(self.car_at(0.0), self.track), OperationalMode.AUTONOMOUS)

    def test_reset(self):
        """Test that reset returns to autonomous with a fresh run."""
        for o in (0.5, 0.5, 0.5):
            self.supervisor.update(self.car_at(o), self.track)
        self.supervisor.reset()
        self.assertIs(self.supervisor.mode, OperationalMode.AUTONOMOUS)
        self.assertEqual(self.supervisor.run_length, 0)

    def test_error_relative_to_reference(self):
        """Test that tracking error is measured from the oracle's skirting line."""
        track = straight_track(50.0, obstacles=[(10.0, 0.4, 0.2)])
        supervisor = Supervisor(OverridePolicy(), self.config, DirectExpert(self.config))
        reference = DirectExpert(self.config).reference_offset(track, 10.0)
        car = CarState(x=10.0, y=-reference, heading=0.0)
        self.assertAlmostEqual(supervisor.tracking_error(car, track, track.project(car.x, car.y)), 0.0)

    def test_predicts_collision(self):
        """Test the straight-line projection over the horizon."""
        track = straight_track(50.0, obstacles=[(4.2, 0.0, 0.2)])
        moving = CarState(x=3.7, y=0.0, heading=0.0, speed=1.0)
        self.assertTrue(self.supervisor.predicts_collision(moving, track))
        self.assertFalse(self.supervisor.predicts_collision(CarState(x=3.7, y=0.0, heading=0.0), track))
        blind = Supervisor(OverridePolicy(horizon_ticks=0), self.config)
        self.assertFalse(blind.predicts_collision(moving, track))


class TestSupervise(unittest.TestCase):
    """Test cases for supervised episodes."""

    def setUp(self):
        """Set up test fixtures."""
        self.config = SimConfig()
        self.track = straight_track(200.0)
        self.oracle = DirectExpert(self.config)

    def test_oracle_needs_no_help(self):
        """Test that the oracle driving itself is never corrected."""
        log = supervise(self.oracle, self.oracle, OverridePolicy(), self.track, self.config, 5.0)
        self.assertEqual(log.correctional_ticks, 0)
        self.assertTrue(np.all(log.op == OperationalMode.AUTONOMOUS.code))
        self.assertEqual(log.mode, BehavioralMode.DIRECT)

    def test_hard_left_is_corrected(self):
        """Test that a hard-left policy triggers corrections in runs of at least two ticks."""
        log = supervise(hard_left_policy(), self.oracle, OverridePolicy(), self.track, self.config, 5.0)
        self.assertGreater(log.correctional_ticks, 0)
        runs = log.runs()
        for _, length in runs[:-1]:
            self.assertGreaterEqual(length, 2)
        corrected = log.op == OperationalMode.CORRECTIONAL.code
        np.testing.assert_array_equal(log.steer[corrected], log.oracle_steer[corrected])


if __name__ == "__main__":
    unittest.main()
