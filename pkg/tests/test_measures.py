import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussreg.errors import DimensionMismatch, EmptyMeasure, MassNotBalanced, UnknownDensity
from gaussreg.gaussian_space import GaussianSpace, sample
from gaussreg.measures import (Binning, EmpiricalMeasure, coarsen, difference, discretize, get_density,
                               kantorovich_cdf_1d, kantorovich_norm, kr_norm, load_measure, primal_transport_cost,
                               pushforward, save_measure, shift, tv_distance, tv_shift_closed_form,
                               tv_shift_oracle_1d)
from gaussreg.smooth_maps import get_map

# 4 Phi(h/2) - 2 and the chi2_1 shift TV, evaluated independently with mpmath at 30 digits
TV_NORMAL_1 = 0.765849845096052414550818442433
TV_NORMAL_02 = 0.159311349108115934675735630808
TV_CHI2_01 = 0.49634073190830144258275282903
TV_CHI2_03 = 0.832235158459269635635249521389


def two_point(h):
    h = np.atleast_1d(np.asarray(h, dtype=float))
    return EmpiricalMeasure(np.vstack([np.zeros_like(h), h]), np.array([1.0, -1.0]))


def test_pushforward_examples(big1):
    mu = pushforward(get_map("x1"), big1)
    x = mu.points[:, 0]
    assert abs(x.mean()) <= 4 * x.std() / np.sqrt(x.size)
    chi = pushforward(get_map("x1sq"), big1).points[:, 0]
    assert abs(chi.mean() - 1.0) <= 4 * chi.std() / np.sqrt(chi.size)
    c = pushforward(get_map("const_1"), big1.prefix(10))
    assert np.all(c.points == 1.0)


def test_pushforward_dimension_check(mid2):
    with pytest.raises(DimensionMismatch):
        pushforward(get_map("x1"), mid2)


def test_shift_examples():
    d = EmpiricalMeasure.dirac([0.0])
    assert np.array_equal(shift(d, [2.5]).points, [[2.5]])
    mu = EmpiricalMeasure.uniform(np.arange(5.0))
    assert np.array_equal(shift(mu, [0.0]).points, mu.points)
    assert np.allclose(shift(shift(mu, [0.3]), [-0.3]).points, mu.points)


def test_tv_examples(big1):
    mu = pushforward(get_map("x1"), big1.prefix(100_000))
    assert tv_distance(mu, mu).value == 0.0
    far = tv_distance(EmpiricalMeasure.dirac([0.0]), EmpiricalMeasure.dirac([5.0]), Binning(width=1.0))
    assert far.value == 2.0
    rep = tv_distance(shift(mu, [1.0]), mu)
    assert abs(rep.value - TV_NORMAL_1) <= 0.02 * TV_NORMAL_1
    assert rep.refined_value is not None


def test_kr_and_kantorovich_two_point():
    assert kr_norm(two_point([0.5])).value == pytest.approx(0.5, abs=1e-12)
    assert kr_norm(two_point([3.0])).value == pytest.approx(2.0, abs=1e-12)
    assert kr_norm(EmpiricalMeasure(np.zeros((2, 1)), np.array([1.0, -1.0]))).value == pytest.approx(0.0, abs=1e-12)
    assert kantorovich_norm(two_point([1.7])).value == pytest.approx(1.7, abs=1e-12)
    assert kantorovich_norm(two_point([3.0, 4.0])).value == pytest.approx(5.0, abs=1e-12)


def test_kantorovich_three_atoms():
    omega = EmpiricalMeasure(np.array([[0.0], [2.0], [1.0]]), np.array([0.5, 0.5, -1.0]))
    assert kantorovich_norm(omega).value == pytest.approx(1.0, abs=1e-12)
    assert kantorovich_cdf_1d(omega) == pytest.approx(1.0, abs=1e-15)


def test_unbalanced_measures():
    omega = EmpiricalMeasure(np.array([[0.0], [1.0]]), np.array([1.0, -0.5]))
    with pytest.raises(MassNotBalanced):
        kantorovich_norm(omega)
    # the bounded-Lipschitz norm needs no balance: a lone unit atom has norm 1
    assert kr_norm(EmpiricalMeasure.dirac([0.0])).value == pytest.approx(1.0, abs=1e-12)


def test_empty_measure():
    with pytest.raises(EmptyMeasure):
        EmpiricalMeasure.uniform(np.zeros((0, 1)))


def test_oracle_shift_values():
    assert tv_shift_oracle_1d("normal", 1.0) == pytest.approx(TV_NORMAL_1, abs=1e-10)
    assert tv_shift_oracle_1d("normal", 0.2) == pytest.approx(TV_NORMAL_02, abs=1e-10)
    assert tv_shift_oracle_1d("chi2_1", 0.1) == pytest.approx(TV_CHI2_01, abs=1e-8)
    assert tv_shift_oracle_1d("chi2_1", 0.3) == pytest.approx(TV_CHI2_03, abs=1e-8)
    assert tv_shift_oracle_1d("uniform", 0.25) == pytest.approx(0.5, abs=1e-12)
    for d in ("normal", "chi2_1", "uniform"):
        assert tv_shift_oracle_1d(d, 0.0) == 0.0
        assert tv_shift_closed_form(d, 0.3) == pytest.approx(tv_shift_oracle_1d(d, 0.3), abs=1e-8)


def test_unknown_density():
    with pytest.raises(UnknownDensity):
        get_density("cauchy")


@pytest.mark.parametrize("density", ["normal", "chi2_1"])
def test_shift_continuity_on_oracle_path(density):
    vals = [tv_shift_oracle_1d(density, h) for h in np.geomspace(1e-3, 3, 25)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_save_and_load(tmp_path):
    mu = EmpiricalMeasure(np.arange(6.0).reshape(3, 2), np.array([0.2, 0.3, 0.5]))
    save_measure(tmp_path / "m.npz", mu)
    back = load_measure(tmp_path / "m.npz")
    assert np.array_equal(back.points, mu.points) and np.array_equal(back.weights, mu.weights)


def test_coarsening_error_bound():
    x = sample(GaussianSpace(1), 50_000, 4).points
    omega = difference(EmpiricalMeasure.uniform(x), EmpiricalMeasure.uniform(x + 0.2))
    exact = kantorovich_cdf_1d(omega)
    small, err = coarsen(omega, 500)
    assert abs(kantorovich_cdf_1d(small) - exact) <= err
    rep = kr_norm(omega)
    assert rep.value <= exact + (rep.error or 0.0) + 1e-9


def test_discretize_is_probability():
    mu = discretize("chi2_1", 1024)
    assert mu.is_probability(1e-8)


def random_balanced(rng, size, dim):
    pts = rng.normal(size=(size, dim)) * 1.5
    w = rng.random(size)
    half = size // 2
    w[:half] /= w[:half].sum()
    w[half:] /= -w[half:].sum()
    return EmpiricalMeasure(pts, w)


@given(st.integers(2, 12), st.integers(1, 3), st.integers(0, 10_000))
def test_lp_matches_primal_transport(size, dim, seed):
    omega = random_balanced(np.random.default_rng(seed), size, dim)
    assert kantorovich_norm(omega).value == pytest.approx(primal_transport_cost(omega), abs=1e-7)
    assert kr_norm(omega).value == pytest.approx(primal_transport_cost(omega, cap=2.0), abs=1e-7)


@given(st.integers(2, 12), st.integers(1, 3), st.integers(0, 10_000))
def test_norm_ordering(size, dim, seed):
    omega = random_balanced(np.random.default_rng(seed), size, dim)
    kr = kr_norm(omega).value
    assert kr <= kantorovich_norm(omega).value + 1e-9
    assert kr <= omega.total_variation_mass + 1e-9


@given(st.integers(2, 30), st.integers(0, 10_000))
def test_1d_lp_matches_cdf_formula(size, seed):
    omega = random_balanced(np.random.default_rng(seed), size, 1)
    assert kantorovich_norm(omega).value == pytest.approx(kantorovich_cdf_1d(omega), abs=1e-9)


@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_metric_axioms(seed, a, b):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(400, 1))
    mus = [EmpiricalMeasure.uniform(x), EmpiricalMeasure.uniform(x + a), EmpiricalMeasure.uniform(1.5 * x + b)]
    binning = Binning(width=0.25, refine=False)
    tv = lambda p, q: tv_distance(p, q, binning).value
    k = lambda p, q: kantorovich_norm(difference(p, q)).value
    for d in (tv, k):
        assert d(mus[0], mus[1]) == pytest.approx(d(mus[1], mus[0]), abs=1e-9)
        assert d(mus[0], mus[2]) <= d(mus[0], mus[1]) + d(mus[1], mus[2]) + 1e-9
