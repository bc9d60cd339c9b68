"""
Parallel job runner for trials and episodes.
"""

from concurrent.futures import Future, ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Callable, Dict, Generic, List, Sequence, TypeVar
from uuid import UUID

from loguru import logger

from multinet.core.models import Job, JobStatus

S = TypeVar("S")
R = TypeVar("R")


class JobRunner(Generic[S, R]):
    """
    Maps a function over job items on a thread pool.

    Results come back in submission order. The first failure is re-raised
    after every job has finished.
    """

    def __init__(self, threads: int = 1, job_type: str = "job"):
        if threads < 1:
            raise ValueError("threads must be at least 1")
        self.threads = threads
        self.job_type = job_type
        self.jobs: Dict[UUID, Job] = {}

    def _run_one(self, fn: Callable[[S], R], item: S, job: Job) -> R:
        job.status = JobStatus.RUNNING
        job.started_at = datetime.now(timezone.utc)
        logger.debug(f"Starting {job.job_type} {job.index}")
        try:
            result = fn(item)
        except Exception as e:
            job.status = JobStatus.FAILED
            job.error_message = str(e)
            job.completed_at = datetime.now(timezone.utc)
            logger.error(f"{job.job_type} {job.index} failed: {e}")
            raise
        job.status = JobStatus.COMPLETED
        job.completed_at = datetime.now(timezone.utc)
        return result

    def _run_all(self, fn: Callable[[S], R], items: Sequence[S], jobs: List[Job]) -> List[Future]:
        if self.threads == 1 or len(items) <= 1:
            futures: List[Future] = []
            for item, job in zip(items, jobs):
                future: Future = Future()
                try:
                    future.set_result(self._run_one(fn, item, job))
                except Exception as e:
                    future.set_exception(e)
                futures.append(future)
            return futures
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return [pool.submit(self._run_one, fn, item, job) for item, job in zip(items, jobs)]

    def map(self, fn: Callable[[S], R], items: Sequence[S]) -> List[R]:
        """
        Run fn over every item.

        Args:
            fn: Job body
            items: One entry per job

        Returns:
            Results in the order of items
        """
        jobs = [Job(job_type=self.job_type, index=i) for i in range(len(items))]
        self.jobs.update({job.id: job for job in jobs})

        futures = self._run_all(fn, items, jobs)
        errors = [future.exception() for future in futures if future.exception() is not None]
        if errors:
            raise errors[0]
        logger.debug(f"Completed {len(items)} {self.job_type} jobs on {self.threads} threads")
        return [future.result() for future in futures]

    def status_counts(self) -> Dict[JobStatus, int]:
        counts = {status: 0 for status in JobStatus}
        for job in self.jobs.values():
            counts[job.status] += 1
        return counts
