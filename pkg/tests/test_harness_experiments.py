"""
Tests for the MultiNet versus MTL experiments and autonomy evaluation.
"""

import math
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

from multinet.core.errors import DataError
from multinet.core.models import BehavioralMode, NetworkVariant, OverridePolicy, SimConfig
from multinet.harness import experiments
from multinet.harness.experiments import (
    MTL,
    MULTINET,
    POOLED,
    ModeContrast,
    check_budgets,
    evaluate_autonomy,
    load_selected,
    mode_contrast,
    multinet_vs_mtl,
    network_seed,
    per_mode_comparison,
    split_per_mode,
)
from multinet.harness.metrics import LossCurve
from multinet.harness.training import train
from multinet.model.network import build_model
from multinet.sim.track import FoliageBand, straight_track
from tests.helpers import autonomous_codes, make_dataset, make_log, quick_training, tiny_network


def per_mode_datasets(size=20):
    return {mode: make_dataset({mode: size}, seed=10 + mode.index) for mode in BehavioralMode}


class TestBudgets(unittest.TestCase):
    """Test cases for equal data budgets."""

    def test_split_per_mode(self):
        """Test that every mode splits to the same training budget."""
        trains, vals, budget = split_per_mode(per_mode_datasets(), 0.10, seed=0)
        self.assertEqual(budget, 18)
        self.assertEqual({len(v) for v in vals.values()}, {2})
        for mode in BehavioralMode:
            self.assertEqual(trains[mode].modes_present(), [mode])

    def test_unequal_budgets(self):
        """Test that unequal per-mode datasets are refused."""
        datasets = per_mode_datasets()
        datasets[BehavioralMode.FOLLOW] = make_dataset({BehavioralMode.FOLLOW: 12})
        with self.assertRaises(DataError):
            split_per_mode(datasets, 0.10, seed=0)

    def test_mixed_mode_dataset(self):
        """Test that a per-mode dataset holding another mode is refused."""
        datasets = per_mode_datasets(4)
        datasets[BehavioralMode.DIRECT] = make_dataset({BehavioralMode.DIRECT: 2, BehavioralMode.FOLLOW: 2})
        with self.assertRaises(DataError):
            split_per_mode(datasets, 0.25, seed=0)

    def test_check_budgets(self):
        """Test that differing per-epoch counts are caught."""
        same = [LossCurve("a", 0, moments_per_epoch=[18, 18]), LossCurve("b", 0, moments_per_epoch=[18, 18])]
        self.assertEqual(check_budgets(same), 18)
        with self.assertRaises(DataError):
            check_budgets(same + [LossCurve("c", 0, moments_per_epoch=[18, 54])])

    def test_network_seed(self):
        """Test per-network seeds are stable and distinct."""
        self.assertEqual(network_seed(0, 1, MULTINET), network_seed(0, 1, MULTINET))
        self.assertNotEqual(network_seed(0, 1, MULTINET), network_seed(0, 1, "mtl-direct"))
        self.assertNotEqual(network_seed(0, 1, MULTINET), network_seed(0, 2, MULTINET))


class TestMultinetVsMtl(unittest.TestCase):
    """Test cases for the main comparison."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.config = quick_training(epochs=2, trials=2)

    def tearDown(self):
        """Clean up test fixtures."""
        self.temp_dir.cleanup()

    def test_report_shape(self):
        """Test curves, families, budgets and selections."""
        report = multinet_vs_mtl(per_mode_datasets(), self.config, tiny_network())
        self.assertEqual(report.budget, 18)
        self.assertEqual(len(report.curves), 2 * 4)
        self.assertEqual(sorted(report.families), [MTL, MULTINET])
        for family in (MULTINET, MTL):
            self.assertEqual(len(report.families[family]), 2)
            trial, epoch = report.selected[family]
            self.assertIn(trial, (0, 1))
            self.assertIn(epoch, (1, 2))
            self.assertEqual(len(report.interval_curve(family)), 2)
        self.assertTrue(all(c.moments_per_epoch == [18, 18] for c in report.curves))
        self.assertTrue(math.isfinite(report.delta_loss["all"]))
        self.assertEqual(report.run_name, "multinet_vs_mtl__seeds_3x2")

    def test_mtl_curve_is_mode_average(self):
        """Test that the MTL family curve averages the per-mode networks trial by trial."""
        report = multinet_vs_mtl(per_mode_datasets(), quick_training(epochs=1, trials=1), tiny_network())
        per_mode = [c.val_loss[0] for c in report.curves if c.network.startswith(f"{MTL}-")]
        self.assertEqual(len(per_mode), 3)
        self.assertAlmostEqual(report.families[MTL][0].val_loss[0], float(np.mean(per_mode)))

    def test_pooled_baseline(self):
        """Test that the pooled baseline adds a mode-blind network on the same budget."""
        report = multinet_vs_mtl(
            per_mode_datasets(), quick_training(epochs=1, trials=1), tiny_network(), pooled_baseline=True
        )
        self.assertIn(POOLED, report.families)
        self.assertEqual(len(report.curves), 5)
        self.assertEqual(report.families[POOLED][0].moments_per_epoch, [18])

    def test_checkpoints_and_load(self):
        """Test that selected checkpoints load as eval-mode networks."""
        report = multinet_vs_mtl(
            per_mode_datasets(),
            quick_training(epochs=1, trials=1),
            tiny_network(),
            checkpoint_dir=Path(self.temp_dir.name),
        )
        multinet = load_selected(report, MULTINET)
        mtl = load_selected(report, MTL, BehavioralMode.FURTIVE)
        self.assertEqual(multinet.variant, NetworkVariant.MULTINET)
        self.assertEqual(mtl.variant, NetworkVariant.MTL)
        self.assertFalse(multinet.training)

    def test_load_without_checkpoints(self):
        """Test that loading fails when no checkpoints were written."""
        report = multinet_vs_mtl(per_mode_datasets(), quick_training(epochs=1, trials=1), tiny_network())
        with self.assertRaises(DataError):
            load_selected(report, MULTINET)


class TestPerModeComparison(unittest.TestCase):
    """Test cases for the single-mode comparison."""

    def test_validation_is_mode_only(self):
        """Test that both networks validate on the chosen mode alone."""
        with patch.object(experiments, "train", wraps=train) as spy:
            report = per_mode_comparison(
                BehavioralMode.FOLLOW, per_mode_datasets(), quick_training(epochs=1, trials=1), tiny_network()
            )
        self.assertEqual(spy.call_count, 2)
        for call in spy.call_args_list:
            val_set = call.args[2]
            self.assertEqual(val_set.modes_present(), [BehavioralMode.FOLLOW])
        multinet_train = spy.call_args_list[0].args[1]
        self.assertEqual(multinet_train.modes_present(), list(BehavioralMode))
        self.assertIn("follow", report.delta_loss)
        self.assertEqual(report.validation_modes, [BehavioralMode.FOLLOW])

    def test_missing_mode(self):
        """Test that a mode without data is refused."""
        datasets = per_mode_datasets()
        del datasets[BehavioralMode.FURTIVE]
        with self.assertRaises(DataError):
            per_mode_comparison(BehavioralMode.FURTIVE, datasets, quick_training())


class TestAutonomyEvaluation(unittest.TestCase):
    """Test cases for closed-loop evaluation."""

    def test_evaluate_autonomy(self):
        """Test per-mode scores and their difference."""
        report = multinet_vs_mtl(per_mode_datasets(), quick_training(epochs=1, trials=1), tiny_network())
        models = {MULTINET: build_model(tiny_network()), MTL: build_model(tiny_network(NetworkVariant.MTL))}

        def fake_drive(model, mode, tracks, sim_config, override, duration_s, threads):
            if model is models[MULTINET]:
                return [make_log(autonomous_codes(100), mode=mode, with_images=False)]
            return [make_log([2] * 10 + [1] * 90, mode=mode, with_images=False)]

        with patch.object(experiments, "load_selected", side_effect=lambda r, family, mode=None: models[family]), \
                patch.object(experiments, "_drive", side_effect=fake_drive):
            scores = evaluate_autonomy(
                report,
                {BehavioralMode.DIRECT: [straight_track(20.0)], BehavioralMode.FURTIVE: []},
                SimConfig(),
                OverridePolicy(),
                1.0,
            )
        self.assertEqual(list(scores), [BehavioralMode.DIRECT])
        self.assertEqual(scores[BehavioralMode.DIRECT][MULTINET], 100.0)
        self.assertAlmostEqual(scores[BehavioralMode.DIRECT][MTL], 90.0)
        self.assertAlmostEqual(scores[BehavioralMode.DIRECT]["delta"], 10.0)


class TestModeContrast(unittest.TestCase):
    """Test cases for furtive against direct driving."""

    def test_reductions(self):
        """Test the relative motor and boundary reductions."""
        contrast = ModeContrast(motor_furtive=0.6, motor_direct=0.75, boundary_furtive=0.3, boundary_direct=0.9)
        self.assertAlmostEqual(contrast.motor_reduction, 0.2)
        self.assertAlmostEqual(contrast.boundary_reduction, 2.0 / 3.0)
        self.assertEqual(ModeContrast(0.5, 0.0, 0.5, 0.0).motor_reduction, 0.0)

    def test_requires_multinet_and_foliage(self):
        """Test that an MTL model or a bare track is refused."""
        foliage = straight_track(40.0, foliage=[FoliageBand(side=1, s_start=0.0, length=30.0, depth=0.6)])
        with self.assertRaises(DataError):
            mode_contrast(build_model(tiny_network(NetworkVariant.MTL)), foliage, SimConfig(), OverridePolicy(), 1.0)
        with self.assertRaises(DataError):
            mode_contrast(build_model(tiny_network()), straight_track(40.0), SimConfig(), OverridePolicy(), 1.0)

    def test_only_autonomous_foliage_ticks_count(self):
        """Test that motor and boundary are both averaged over autonomous ticks inside foliage."""
        motor = {BehavioralMode.FURTIVE: 0.4, BehavioralMode.DIRECT: 0.8}
        boundary = {BehavioralMode.FURTIVE: 0.2, BehavioralMode.DIRECT: 0.5}

        def contrast_log(policy, oracle, override, track, config, duration_s):
            log = make_log([1] * 20 + [2] * 10, mode=oracle.mode)
            log.in_foliage[:10] = True
            log.in_foliage[20:] = True
            log.motor[:] = 0.9
            log.motor[:10] = motor[oracle.mode]
            log.boundary_distance[:] = 5.0
            log.boundary_distance[:10] = boundary[oracle.mode]
            return log

        foliage = straight_track(40.0, foliage=[FoliageBand(side=1, s_start=0.0, length=30.0, depth=0.6)])
        with patch.object(experiments, "supervise", side_effect=contrast_log):
            contrast = mode_contrast(build_model(tiny_network()), foliage, SimConfig(), OverridePolicy(), 1.0)
        self.assertAlmostEqual(contrast.motor_furtive, 0.4)
        self.assertAlmostEqual(contrast.motor_direct, 0.8)
        self.assertAlmostEqual(contrast.boundary_furtive, 0.2)
        self.assertAlmostEqual(contrast.boundary_direct, 0.5)
        self.assertAlmostEqual(contrast.boundary_reduction, 0.6)

    def test_runs_both_modes(self):
        """Test a short contrast run on a foliage track."""
        foliage = straight_track(40.0, foliage=[FoliageBand(side=1, s_start=0.0, length=30.0, depth=0.6)])
        contrast = mode_contrast(build_model(tiny_network()), foliage, SimConfig(), OverridePolicy(), 1.0)
        self.assertTrue(math.isfinite(contrast.boundary_direct))
        self.assertTrue(math.isfinite(contrast.boundary_furtive))


if __name__ == "__main__":
    unittest.main()
