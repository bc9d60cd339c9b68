"""
Tests for expert data collection.
"""

import unittest

import numpy as np

from multinet.core.models import BehavioralMode, OperationalMode, SimConfig, TrackFeatures
from multinet.sim.collect import collect_all, collect_expert_data, scene_for, scene_seed


class TestScenes(unittest.TestCase):
    """Test cases for per-episode scenes."""

    def test_seeds(self):
        """Test that scene seeds depend on run, mode, episode and stream."""
        base = scene_seed(1, BehavioralMode.DIRECT, 0)
        self.assertEqual(base, scene_seed(1, BehavioralMode.DIRECT, 0))
        others = {
            scene_seed(2, BehavioralMode.DIRECT, 0),
            scene_seed(1, BehavioralMode.FOLLOW, 0),
            scene_seed(1, BehavioralMode.DIRECT, 1),
            scene_seed(1, BehavioralMode.DIRECT, 0, stream=1),
        }
        self.assertNotIn(base, others)
        self.assertEqual(len(others), 4)

    def test_scene_features(self):
        """Test that a scene carries its mode's features."""
        config = SimConfig()
        track = scene_for(0, BehavioralMode.FOLLOW, 0, 100.0, TrackFeatures.for_mode(BehavioralMode.FOLLOW), config)
        self.assertTrue(track.lead_car)


class TestCollect(unittest.TestCase):
    """Test cases for collect_expert_data."""

    def setUp(self):
        """Set up test fixtures."""
        self.config = SimConfig()
        self.features = TrackFeatures.for_mode(BehavioralMode.DIRECT, obstacles=0)

    def collect(self, **kwargs):
        args = dict(episodes=2, seed=5, features=self.features, config=self.config, duration_s=2.0, length_m=100.0)
        args.update(kwargs)
        return collect_expert_data(BehavioralMode.DIRECT, **args)

    def test_counts(self):
        """Test moments per episode and the skip bookkeeping."""
        collection = self.collect()
        ticks = 61
        self.assertEqual(len(collection.dataset), 2 * (ticks - 11))
        self.assertEqual(collection.skipped.emitted, len(collection.dataset))
        self.assertEqual(collection.skipped.ticks, collection.skipped.emitted + collection.skipped.total_skipped)
        self.assertTrue(np.all(collection.dataset.operational == OperationalMode.EXPERT.code))
        self.assertTrue(np.all(collection.dataset.behavioral == BehavioralMode.DIRECT.index))
        self.assertEqual(collection.collisions, 0)

    def test_manifest_entry(self):
        """Test that the manifest counts match the dataset."""
        collection = self.collect(episodes=1)
        entry = collection.manifest_entry()
        self.assertEqual(entry["moments"], len(collection.dataset))
        self.assertEqual(entry["expert"] + entry["correctional"], entry["moments"])
        self.assertEqual(entry["episodes"], 1)

    def test_deterministic_across_threads(self):
        """Test that threads do not change the collected bytes."""
        one = self.collect(threads=1)
        two = self.collect(threads=2)
        self.assertTrue(one.dataset.equals(two.dataset))

    def test_cap(self):
        """Test the order-preserving cap on moments."""
        full = self.collect(episodes=1)
        capped = self.collect(episodes=1, max_moments=20)
        self.assertEqual(len(capped.dataset), 20)
        self.assertTrue(np.all(np.diff(capped.dataset.timestamps.astype(np.int64)) > 0))
        self.assertTrue(set(capped.dataset.timestamps.tolist()) <= set(full.dataset.timestamps.tolist()))

    def test_collect_all(self):
        """Test one collection per requested mode in order."""
        modes = [BehavioralMode.FURTIVE, BehavioralMode.DIRECT]
        features = {mode: TrackFeatures.for_mode(mode) for mode in modes}
        collections = collect_all(modes, 1, 0, features, self.config, 1.0, length_m=100.0)
        self.assertEqual([c.mode for c in collections], modes)


if __name__ == "__main__":
    unittest.main()
