"""
Tests for evaluation metrics.
"""

import itertools
import unittest

import numpy as np

from multinet.core.errors import DataError
from multinet.harness.metrics import (
    LossCurve,
    autonomy,
    autonomy_from_times,
    average_curves,
    confidence_interval,
    curve_matrix,
    delta_loss_percent,
    difference_upper_bound,
    mean_autonomy,
    mean_curve,
    select_model,
)
from tests.helpers import autonomous_codes, make_log


class TestAutonomy(unittest.TestCase):
    """Test cases for percentage autonomy."""

    def test_fixtures(self):
        """Test 6 s of corrections in 60 s and a correction-free run."""
        self.assertAlmostEqual(autonomy_from_times(6.0, 60.0), 90.0)
        self.assertEqual(autonomy_from_times(0.0, 60.0), 100.0)

    def test_from_log(self):
        """Test autonomy counted from correctional ticks."""
        log = make_log([2] * 10 + [1] * 90, with_images=False)
        self.assertAlmostEqual(autonomy(log), 90.0)
        self.assertEqual(autonomy(make_log(autonomous_codes(50), with_images=False)), 100.0)

    def test_pooled(self):
        """Test that several episodes pool correction and elapsed time."""
        logs = [make_log([2] * 10 + [1] * 90, with_images=False), make_log(autonomous_codes(50), with_images=False)]
        self.assertAlmostEqual(mean_autonomy(logs), (1.0 - 10 / 150) * 100.0)
        with self.assertRaises(DataError):
            mean_autonomy([])

    def test_invalid_times(self):
        """Test that impossible times are refused."""
        with self.assertRaises(DataError):
            autonomy_from_times(1.0, 0.0)
        with self.assertRaises(DataError):
            autonomy_from_times(61.0, 60.0)


class TestDeltaLoss(unittest.TestCase):
    """Test cases for the relative loss gap."""

    def test_fixtures(self):
        """Test known gaps."""
        self.assertAlmostEqual(delta_loss_percent(1.08, 1.0), 8.0)
        self.assertEqual(delta_loss_percent(0.5, 0.5), 0.0)
        self.assertAlmostEqual(delta_loss_percent(1.0816, 1.0), 8.16)
        self.assertAlmostEqual(delta_loss_percent(1.1258, 1.0), 12.58)
        self.assertLess(delta_loss_percent(0.9, 1.0), 0.0)

    def test_non_positive_reference(self):
        """Test that a zero MultiNet loss is refused."""
        with self.assertRaises(DataError):
            delta_loss_percent(1.0, 0.0)


class TestConfidenceInterval(unittest.TestCase):
    """Test cases for Student-t intervals."""

    def test_fixture(self):
        """Test {1, 2, 3} at 95%."""
        mean, half = confidence_interval([1.0, 2.0, 3.0])
        self.assertEqual(mean, 2.0)
        self.assertAlmostEqual(half, 2.4841, places=4)

    def test_identical_samples(self):
        """Test that identical trials give a zero-width interval."""
        self.assertEqual(confidence_interval([0.25] * 5), (0.25, 0.0))

    def test_scaling(self):
        """Test that doubling every sample doubles the half-width."""
        samples = np.random.default_rng(0).uniform(size=8)
        _, half = confidence_interval(samples)
        _, doubled = confidence_interval(2.0 * samples)
        self.assertAlmostEqual(doubled, 2.0 * half, places=12)

    def test_too_few(self):
        """Test that one sample is refused."""
        with self.assertRaises(DataError):
            confidence_interval([1.0])

    def test_upper_bound(self):
        """Test the one-sided bound on paired differences."""
        self.assertAlmostEqual(difference_upper_bound([1.0, 2.0, 3.0]), 2.0 + 2.919986 / np.sqrt(3.0), places=5)


class TestSelectModel(unittest.TestCase):
    """Test cases for checkpoint selection."""

    def test_strict_minimum(self):
        """Test the unique lowest validation loss."""
        curves = [
            LossCurve("multinet", 0, val_loss=[0.5, 0.3, 0.4]),
            LossCurve("multinet", 1, val_loss=[0.6, 0.2, 0.25]),
        ]
        self.assertEqual(select_model(curves), (1, 2))

    def test_ties(self):
        """Test that ties go to the lower epoch, then the lower trial."""
        curves = [
            LossCurve("mtl", 1, val_loss=[0.5, 0.2]),
            LossCurve("mtl", 0, val_loss=[0.5, 0.2, 0.2]),
            LossCurve("mtl", 2, val_loss=[0.2]),
        ]
        self.assertEqual(select_model(curves), (2, 1))
        self.assertEqual(select_model(curves[:2]), (0, 2))

    def test_brute_force(self):
        """Test random tied grids against an exhaustive search and any curve order."""
        rng = np.random.default_rng(12)
        for _ in range(50):
            grid = np.round(rng.uniform(size=(4, 6)), 1)
            curves = [LossCurve("multinet", t, val_loss=list(grid[t])) for t in range(4)]
            expected = min(
                ((grid[t, e], e + 1, t) for t, e in itertools.product(range(4), range(6)))
            )
            self.assertEqual(select_model(curves), (expected[2], expected[1]))
            self.assertEqual(select_model(curves[::-1]), (expected[2], expected[1]))

    def test_empty(self):
        """Test that no losses cannot be selected from."""
        with self.assertRaises(DataError):
            select_model([LossCurve("multinet", 0)])


class TestCurves(unittest.TestCase):
    """Test cases for curve bookkeeping."""

    def test_check(self):
        """Test curve validation."""
        LossCurve("multinet", 0, train_loss=[0.1], val_loss=[0.2]).check()
        with self.assertRaises(DataError):
            LossCurve("multinet", 0, train_loss=[0.1, 0.2], val_loss=[0.2]).check()
        with self.assertRaises(DataError):
            LossCurve("multinet", 0, train_loss=[-0.1], val_loss=[0.2]).check()
        with self.assertRaises(DataError):
            LossCurve("multinet", 0, train_loss=[float("nan")], val_loss=[0.2]).check()

    def test_mean_curve(self):
        """Test per-epoch means over trials."""
        curves = [LossCurve("m", 0, val_loss=[1.0, 2.0]), LossCurve("m", 1, val_loss=[3.0, 4.0])]
        np.testing.assert_array_equal(mean_curve(curves), [2.0, 3.0])
        with self.assertRaises(DataError):
            curve_matrix([LossCurve("m", 0, val_loss=[1.0]), LossCurve("m", 1, val_loss=[1.0, 2.0])])

    def test_average_curves(self):
        """Test trial-by-trial averaging across per-mode groups."""
        groups = [
            [LossCurve("mtl", 0, [1.0, 2.0], [0.5, 0.4], [10, 10])],
            [LossCurve("mtl", 0, [3.0, 4.0], [0.7, 0.2], [10, 10])],
        ]
        (averaged,) = average_curves(groups, "mtl")
        self.assertEqual(averaged.train_loss, [2.0, 3.0])
        np.testing.assert_allclose(averaged.val_loss, [0.6, 0.3])
        self.assertEqual(averaged.moments_per_epoch, [10, 10])
        with self.assertRaises(DataError):
            average_curves([groups[0], [LossCurve("mtl", 1, [1.0], [1.0])]], "mtl")


if __name__ == "__main__":
    unittest.main()
