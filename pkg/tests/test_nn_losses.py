"""
Tests for the trajectory losses.
"""

import math
import unittest

import numpy as np

from multinet.core.errors import ShapeError
from multinet.nn.gradcheck import check_gradient
from multinet.nn.losses import mse_train_loss, mse_validation_grad, mse_validation_loss, validation_losses


class TestTrainLoss(unittest.TestCase):
    """Test cases for the all-steps training loss."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(21)

    def test_perfect_prediction(self):
        """Test that pred == labels gives zero loss and zero gradient."""
        labels = self.rng.uniform(size=20)
        loss, grad = mse_train_loss(labels.copy(), labels)
        self.assertEqual(loss, 0.0)
        self.assertTrue(np.all(grad == 0.0))

    def test_steer_error_fixture(self):
        """Test ten steer errors of 0.1 and no motor error."""
        labels = np.full(20, 0.5)
        pred = labels.copy()
        pred[:10] += 0.1
        loss, _ = mse_train_loss(pred, labels)
        self.assertAlmostEqual(loss, 0.005, places=15)

    def test_matches_summation(self):
        """Test 1000 random pairs against a term-by-term summation."""
        for _ in range(1000):
            pred, labels = self.rng.uniform(size=20), self.rng.uniform(size=20)
            steer = math.fsum((pred[i] - labels[i]) ** 2 for i in range(10))
            motor = math.fsum((pred[10 + i] - labels[10 + i]) ** 2 for i in range(10))
            expected = (steer + motor) / 20.0
            loss, _ = mse_train_loss(pred, labels)
            self.assertAlmostEqual(loss, expected, delta=1e-15)

    def test_batch_average(self):
        """Test that a batch loss is the mean of per-sample losses."""
        pred, labels = self.rng.uniform(size=(5, 20)), self.rng.uniform(size=(5, 20))
        batch_loss, _ = mse_train_loss(pred, labels)
        singles = [mse_train_loss(pred[i], labels[i])[0] for i in range(5)]
        self.assertAlmostEqual(batch_loss, float(np.mean(singles)), places=14)

    def test_step_count_mismatch(self):
        """Test that a horizon other than ten steps is rejected."""
        with self.assertRaises(ShapeError):
            mse_train_loss(np.zeros(18), np.zeros(18))
        with self.assertRaises(ShapeError):
            mse_train_loss(np.zeros(20), np.zeros(18))

    def test_gradient(self):
        """Test the gradient against central differences."""
        pred, labels = self.rng.uniform(size=(4, 20)), self.rng.uniform(size=(4, 20))
        _, grad = mse_train_loss(pred, labels)
        result = check_gradient(lambda: mse_train_loss(pred, labels)[0], pred, grad, coordinates=80)
        self.assertTrue(result.passed())


class TestValidationLoss(unittest.TestCase):
    """Test cases for the final-step validation loss."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(22)

    def test_final_step_fixture(self):
        """Test final-step errors of (0.1, 0.1) with arbitrary earlier errors."""
        labels = np.full(20, 0.5)
        pred = self.rng.uniform(size=20)
        pred[9], pred[19] = 0.6, 0.4
        self.assertAlmostEqual(mse_validation_loss(pred, labels), 0.01, places=15)

    def test_only_final_step_counts(self):
        """Test that huge errors at steps 1-9 do not count."""
        labels = np.full(20, 0.5)
        pred = np.full(20, 1e6)
        pred[9], pred[19] = 0.5, 0.5
        self.assertEqual(mse_validation_loss(pred, labels), 0.0)

    def test_matches_scalar_formula(self):
        """Test random inputs against the scalar formula."""
        for _ in range(1000):
            pred, labels = self.rng.uniform(size=20), self.rng.uniform(size=20)
            expected = 0.5 * ((pred[9] - labels[9]) ** 2 + (pred[19] - labels[19]) ** 2)
            self.assertAlmostEqual(mse_validation_loss(pred, labels), expected, delta=1e-15)

    def test_per_sample_losses(self):
        """Test that the batch loss averages per-sample final-step losses."""
        pred, labels = self.rng.uniform(size=(6, 20)), self.rng.uniform(size=(6, 20))
        per_sample = validation_losses(pred, labels)
        self.assertEqual(per_sample.shape, (6,))
        self.assertEqual(mse_validation_loss(pred, labels), float(np.mean(per_sample)))

    def test_step_count_mismatch(self):
        """Test that a mismatched horizon is rejected."""
        with self.assertRaises(ShapeError):
            mse_validation_loss(np.zeros(22), np.zeros(22))

    def test_gradient(self):
        """Test the validation-loss gradient against central differences."""
        pred, labels = self.rng.uniform(size=(3, 20)), self.rng.uniform(size=(3, 20))
        grad = mse_validation_grad(pred, labels)
        self.assertTrue(np.all(np.delete(grad, [9, 19], axis=1) == 0.0))
        result = check_gradient(lambda: mse_validation_loss(pred, labels), pred, grad, coordinates=60)
        self.assertTrue(result.passed())


if __name__ == "__main__":
    unittest.main()
