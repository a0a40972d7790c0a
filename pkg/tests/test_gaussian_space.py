import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussreg.errors import NonFiniteValue
from gaussreg.gaussian_space import GaussianSpace, MCEstimate, estimate, lp_norm, mc_expect, sample


def test_batch_is_reproducible():
    a = sample(GaussianSpace(2), 3, 7, 0)
    b = sample(GaussianSpace(2), 3, 7, 0)
    assert a.points.shape == (3, 2)
    assert np.array_equal(a.points, b.points)


def test_batch_is_read_only():
    b = sample(GaussianSpace(1), 4, 1)
    with pytest.raises(ValueError):
        b.points[0, 0] = 1.0


def test_bad_dimension_and_count():
    with pytest.raises(ValueError):
        GaussianSpace(0)
    with pytest.raises(ValueError):
        sample(GaussianSpace(1), 0, 1)


def test_first_two_moments(big1):
    x = big1.points[:, 0]
    # CLT bands: 4 stderr of the mean, 2% on the variance
    assert abs(x.mean()) <= 4e-3
    assert abs(x.var() - 1.0) <= 0.02


def test_mc_expect_constant_and_square(big1):
    one = mc_expect(lambda X: 1.0, big1)
    assert one.mean == 1.0 and one.stderr == 0.0
    sq = mc_expect(lambda X: X[:, 0] ** 2, big1)
    assert sq.within(1.0)


def test_mc_expect_lognormal_moment(big1):
    est = mc_expect(lambda X: np.exp(X[:, 0]), big1)
    assert est.within(1.6487212707001282)


def test_lp_norms(big1):
    assert lp_norm(lambda X: np.abs(X[:, 0]), 2, big1).within(1.0)
    assert lp_norm(lambda X: 1.0, 7, big1).mean == pytest.approx(1.0, abs=1e-15)
    assert lp_norm(lambda X: np.abs(X[:, 0]), 1, big1).within(0.7978845608028654)


def test_streams_are_uncorrelated():
    a = sample(GaussianSpace(1), 200_000, 5, 1).points[:, 0]
    b = sample(GaussianSpace(1), 200_000, 5, 2).points[:, 0]
    assert abs(np.mean(a * b)) <= 4.0 / math.sqrt(a.size)


def test_estimate_rejects_non_finite():
    with pytest.raises(NonFiniteValue):
        estimate([1.0, np.inf])


def test_estimate_uses_unbiased_variance():
    v = np.array([1.0, 2.0, 4.0])
    est = estimate(v)
    assert est.stderr == pytest.approx(np.std(v, ddof=1) / math.sqrt(3))


def test_negative_stderr_rejected():
    with pytest.raises(ValueError):
        MCEstimate(0.0, -1.0, 1)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_mc_expect_is_linear(a, b, seed):
    batch = sample(GaussianSpace(2), 500, seed)
    f = lambda X: np.sin(X[:, 0])
    g = lambda X: X[:, 1] ** 2
    lhs = mc_expect(lambda X: a * f(X) + b * g(X), batch).mean
    rhs = a * mc_expect(f, batch).mean + b * mc_expect(g, batch).mean
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@given(st.integers(0, 2**32), st.integers(0, 2**32), st.integers(1, 50), st.integers(1, 3))
def test_determinism_property(seed, stream, count, dim):
    a = sample(GaussianSpace(dim), count, seed, stream).points
    b = sample(GaussianSpace(dim), count, seed, stream).points
    assert np.array_equal(a, b)
