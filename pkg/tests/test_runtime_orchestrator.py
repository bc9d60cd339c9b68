"""
Tests for the parallel job runner.
"""

import threading
import time
import unittest
from datetime import timedelta

from multinet.core.models import JobStatus
from multinet.runtime.orchestrator import JobRunner


class TestJobRunner(unittest.TestCase):
    """Test cases for JobRunner."""

    def test_sequential_order(self):
        """Test results in submission order on one thread."""
        runner = JobRunner(1)
        self.assertEqual(runner.map(lambda x: x * x, [3, 1, 2]), [9, 1, 4])
        self.assertEqual(runner.status_counts()[JobStatus.COMPLETED], 3)

    def test_threaded_order(self):
        """Test that results keep submission order even when later jobs finish first."""

        def slow_first(x):
            time.sleep(0.05 if x == 0 else 0.0)
            return x, threading.get_ident()

        results = JobRunner(4, job_type="trial").map(slow_first, list(range(6)))
        self.assertEqual([r[0] for r in results], list(range(6)))

    def test_failure_reraised_after_all_jobs(self):
        """Test that the first failure surfaces and every other job still runs."""
        seen = []
        lock = threading.Lock()

        def job(x):
            with lock:
                seen.append(x)
            if x in (1, 3):
                raise RuntimeError(f"job {x}")
            return x

        runner = JobRunner(2, job_type="episode")
        with self.assertRaises(RuntimeError) as ctx:
            runner.map(job, [0, 1, 2, 3])
        self.assertEqual(str(ctx.exception), "job 1")
        self.assertEqual(sorted(seen), [0, 1, 2, 3])
        counts = runner.status_counts()
        self.assertEqual(counts[JobStatus.FAILED], 2)
        self.assertEqual(counts[JobStatus.COMPLETED], 2)

    def test_sequential_failure(self):
        """Test that a single-threaded failure marks the job failed."""
        runner = JobRunner(1)
        with self.assertRaises(ValueError):
            runner.map(lambda x: int(x), ["1", "x"])
        self.assertEqual(runner.status_counts()[JobStatus.FAILED], 1)

    def test_sequential_failure_runs_remaining_jobs(self):
        """Test that one thread also finishes every job before re-raising the first failure."""
        seen = []

        def job(x):
            seen.append(x)
            if x in (1, 3):
                raise RuntimeError(f"job {x}")
            return x

        runner = JobRunner(1, job_type="trial")
        with self.assertRaises(RuntimeError) as ctx:
            runner.map(job, [0, 1, 2, 3])
        self.assertEqual(str(ctx.exception), "job 1")
        self.assertEqual(seen, [0, 1, 2, 3])
        counts = runner.status_counts()
        self.assertEqual(counts[JobStatus.FAILED], 2)
        self.assertEqual(counts[JobStatus.COMPLETED], 2)

    def test_job_timestamps_are_utc(self):
        """Test that job timestamps are timezone-aware UTC and ordered."""
        runner = JobRunner(1)
        runner.map(lambda x: x, [0])
        job = next(iter(runner.jobs.values()))
        for stamp in (job.created_at, job.started_at, job.completed_at):
            self.assertEqual(stamp.utcoffset(), timedelta(0))
        self.assertLessEqual(job.created_at, job.started_at)
        self.assertLessEqual(job.started_at, job.completed_at)

    def test_invalid_threads(self):
        """Test that fewer than one thread is refused."""
        with self.assertRaises(ValueError):
            JobRunner(0)

    def test_empty(self):
        """Test that no specs give no results."""
        self.assertEqual(JobRunner(3).map(lambda x: x, []), [])


if __name__ == "__main__":
    unittest.main()
