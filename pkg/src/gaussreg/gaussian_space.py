"""Sampling from the standard Gaussian measure on R^n and Monte Carlo estimation.

Random numbers come from numpy's counter-based Philox bit generator keyed by
``(seed, stream_id)``; normals are drawn with numpy's ziggurat sampler
(``Generator.standard_normal``).  Both choices are fixed: bit-exact replay of a
batch is part of the test contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteValue

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class GaussianSpace:
    """The standard Gaussian measure on R^dim (Cameron-Martin space = R^dim)."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray  # (count, dim), read-only
    seed: int
    stream_id: int

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def prefix(self, count: int) -> "SampleBatch":
        """The first ``count`` points, as a batch of its own."""
        return SampleBatch(self.points[:count], self.seed, self.stream_id)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    count: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.count < 1:
            raise ValueError("count must be positive")

    def within(self, value: float, n_stderr: float = 4.0, abs_tol: float = 0.0) -> bool:
        return abs(self.mean - value) <= n_stderr * self.stderr + abs_tol


def rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """A Philox generator whose key is the pair (seed, stream_id)."""
    key = np.array([int(seed) & _MASK64, int(stream_id) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample(space: GaussianSpace, count: int, seed: int, stream_id: int = 0) -> SampleBatch:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    pts = rng(seed, stream_id).standard_normal((int(count), space.dim))
    pts.setflags(write=False)
    return SampleBatch(pts, int(seed), int(stream_id))


def estimate(values) -> MCEstimate:
    """MCEstimate of the mean of per-sample values (unbiased variance)."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no values")
    if not np.all(np.isfinite(v)):
        bad = int(np.count_nonzero(~np.isfinite(v)))
        raise NonFiniteValue(f"{bad} of {v.size} integrand values are not finite")
    n = v.size
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(mean, se, n)


def mc_expect(fn: Callable[[np.ndarray], np.ndarray], batch: SampleBatch) -> MCEstimate:
    """Estimate E[fn(X)], X ~ gamma_n, on a batch.

    ``fn`` is vectorised: it receives the (count, dim) point array and returns
    one value per row (a scalar is broadcast).
    """
    vals = np.broadcast_to(np.asarray(fn(batch.points), dtype=float), (batch.count,))
    return estimate(vals)


def lp_norm_values(values, p: float) -> MCEstimate:
    """(E|v|^p)^{1/p} with the delta-method standard error."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    m = estimate(np.abs(np.asarray(values, dtype=float)) ** p)
    if m.mean == 0.0:
        return MCEstimate(0.0, 0.0, m.count)
    val = m.mean ** (1.0 / p)
    se = val / (p * m.mean) * m.stderr
    return MCEstimate(float(val), float(se), m.count)


def lp_norm(fn: Callable[[np.ndarray], np.ndarray], p: float, batch: SampleBatch) -> MCEstimate:
    vals = np.broadcast_to(np.asarray(fn(batch.points), dtype=float), (batch.count,))
    return lp_norm_values(vals, p)
