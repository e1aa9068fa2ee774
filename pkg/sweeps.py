#!/usr/bin/env python3
"""
Sweep runner for thresholdlab.
Runs independent sweep points (one per (a, k) or per dimension) in worker threads.
"""

import queue
import threading
import traceback
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple


@dataclass
class SweepJob:
    """One sweep point: a sortable key and the call that computes it."""

    key: Tuple
    func: Callable[..., Any]
    args: Tuple = ()
    kwargs: Dict[str, Any] = field(default_factory=dict)


@dataclass
class JobResult:
    """Outcome of one sweep point; error is set iff the job raised."""

    key: Tuple
    value: Any = None
    error: Optional[str] = None
    error_type: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class SweepManager:
    """Manages concurrent sweep points in background threads."""

    def __init__(self, max_workers: int = 2, verbose: bool = False):
        """
        Initialize the sweep manager.

        Args:
            max_workers: Maximum number of worker threads
            verbose: Print a line per finished job
        """
        if max_workers < 1:
            raise ValueError(f"need at least one worker, got {max_workers}")
        self.max_workers = max_workers
        self.verbose = verbose
        self.job_queue: "queue.Queue[SweepJob]" = queue.Queue()
        self.active: Dict[Tuple, str] = {}
        self.completed: Dict[Tuple, JobResult] = {}
        self.failed: Dict[Tuple, JobResult] = {}
        self.keys = set()
        self.lock = threading.Lock()
        self.workers: List[threading.Thread] = []
        self.running = True

    def add_job(self, key: Tuple, func: Callable[..., Any], *args, **kwargs):
        """
        Queue a sweep point.

        Raises:
            ValueError: the key was already queued
        """
        with self.lock:
            if key in self.keys:
                raise ValueError(f"duplicate sweep key {key!r}")
            self.keys.add(key)
        self.job_queue.put(SweepJob(key, func, args, kwargs))

    def start(self):
        """Start worker threads."""
        for _ in range(self.max_workers):
            worker = threading.Thread(target=self._worker, daemon=True)
            worker.start()
            self.workers.append(worker)

    def _worker(self):
        """Worker thread that processes sweep points."""
        while self.running:
            try:
                job = self.job_queue.get(timeout=0.1)
            except queue.Empty:
                continue

            with self.lock:
                self.active[job.key] = getattr(job.func, '__name__', 'job')

            try:
                value = job.func(*job.args, **job.kwargs)
                result = JobResult(job.key, value=value)
                with self.lock:
                    self.completed[job.key] = result
            except Exception as e:
                result = JobResult(job.key, error=str(e) or traceback.format_exc(limit=1).strip(),
                                   error_type=type(e).__name__)
                with self.lock:
                    self.failed[job.key] = result
            finally:
                with self.lock:
                    self.active.pop(job.key, None)
                if self.verbose:
                    mark = '✓' if result.ok else '✗'
                    detail = '' if result.ok else f": {result.error_type}: {result.error}"
                    print(f"  {mark} {job.key}{detail}")
                self.job_queue.task_done()

    def get_status(self) -> Dict[str, int]:
        """Counts of active, completed, failed and queued jobs."""
        with self.lock:
            return {
                'active': len(self.active),
                'completed': len(self.completed),
                'failed': len(self.failed),
                'queued': self.job_queue.qsize(),
            }

    def results(self) -> List[JobResult]:
        """All finished jobs sorted by key, independent of completion order."""
        with self.lock:
            finished = list(self.completed.values()) + list(self.failed.values())
        return sorted(finished, key=lambda result: result.key)

    def stop(self):
        """Stop all workers."""
        self.running = False
        for worker in self.workers:
            worker.join(timeout=1)

    def wait_for_completion(self):
        """Wait for all queued jobs to finish."""
        self.job_queue.join()


def run_sweep(jobs: List[Tuple[Tuple, Callable[..., Any], Tuple]], max_workers: int = 2,
              verbose: bool = False) -> List[JobResult]:
    """Run (key, func, args) jobs to completion and return the sorted results."""
    manager = SweepManager(max_workers=max_workers, verbose=verbose)
    for key, func, args in jobs:
        manager.add_job(key, func, *args)
    manager.start()
    try:
        manager.wait_for_completion()
    finally:
        manager.stop()
    return manager.results()


if __name__ == '__main__':
    import math

    results = run_sweep([((a,), math.log, (a,)) for a in (3.0, 1.0, -1.0, 2.0)], max_workers=2,
                        verbose=True)
    print("=" * 70)
    for result in results:
        print(f"{result.key}: {result.value if result.ok else result.error}")
