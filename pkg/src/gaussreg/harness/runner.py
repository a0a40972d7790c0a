"""Deterministic parallel execution of independent check jobs.

Every job draws its samples from its own Philox stream, derived from the job
name, so results do not depend on scheduling or on the thread count.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from ..gaussian_space import GaussianSpace, SampleBatch, sample

THREADS_ENV = "GAUSSREG_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def stream_id(name: str) -> int:
    """A stable stream number for a job or data set name."""
    return zlib.crc32(name.encode("utf-8"))


def batch_for(name: str, dim: int, count: int, seed: int) -> SampleBatch:
    return sample(GaussianSpace(dim), count, seed, stream_id(name))


@dataclass(frozen=True)
class Context:
    """Run-wide settings shared by all checks."""

    seed: int = 1
    count: int = 1_000_000
    options: dict = field(default_factory=dict)

    def batch(self, name: str, dim: int, count: int | None = None) -> SampleBatch:
        return batch_for(name, dim, count or self.count, self.seed)


@dataclass(frozen=True)
class Job:
    name: str
    fn: Callable[..., list]
    kwargs: dict = field(default_factory=dict)


def run_jobs(jobs: list[Job], ctx: Context, threads: int | None = None) -> list:
    """Run jobs (in parallel if threads > 1); results concatenated in job order."""
    threads = threads or default_threads()

    def one(job: Job):
        return list(job.fn(ctx, **job.kwargs))

    if threads == 1 or len(jobs) <= 1:
        results = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    return [item for res in results for item in res]
