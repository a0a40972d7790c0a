import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussreg.errors import DegenerateFit, MomentDiverged
from gaussreg.gaussian_space import GaussianSpace, sample
from gaussreg.measures import EmpiricalMeasure, discretize, get_density
from gaussreg.smoothness import (besov_alpha, besov_fit, geometric_grid, lemma_1_1_margin, negative_moment,
                                 sigma_estimate, sigma_lower, sigma_lower_converged, sigma_lower_density, sigma_lp,
                                 sigma_upper, small_ball, tv_kr_exponent, u_gamma, u_gamma_quadrature)

# E[eps / (eps + 2|Z|)] by mpmath quadrature at 30 digits
U_ABS_NORMAL = {1.0: 0.471901695334528992666820783999, 0.1: 0.124145746787840251599094685082,
                0.01: 0.0213931857948505081180299730686}
# 6 (4 Phi(0.05) - 2), mpmath
SIX_TV_NORMAL_01 = 0.47853134012093910485341176953


def test_u_gamma_constants():
    assert u_gamma(np.zeros(10), 0.3).mean == 1.0
    assert u_gamma(np.ones(10), 1.0).mean == 0.5
    assert u_gamma(np.ones(10), 0.1).mean == pytest.approx(1 / 11, abs=1e-15)
    q = u_gamma_quadrature(np.ones(10), 1.0)
    assert abs(q.mean - 0.5) <= 4 * q.error


@pytest.mark.parametrize("eps", sorted(U_ABS_NORMAL))
def test_u_gamma_against_quadrature_oracle(big1, eps):
    g = 2 * np.abs(big1.points[:, 0])
    est = u_gamma(g, eps)
    assert abs(est.mean - U_ABS_NORMAL[eps]) <= 4 * est.error
    quad = u_gamma_quadrature(g, eps)
    assert abs(quad.mean - U_ABS_NORMAL[eps]) <= 4 * quad.error


def test_u_gamma_rejects_bad_input():
    with pytest.raises(ValueError):
        u_gamma([1.0], 0.0)
    with pytest.raises(ValueError):
        u_gamma([-1.0], 1.0)


def test_small_ball_moment_bound_constants():
    lhs, rhs = lemma_1_1_margin(np.zeros(5), 1, 0.1)
    assert lhs.mean == pytest.approx(10.0) and rhs == pytest.approx(10.0)
    lhs, rhs = lemma_1_1_margin(np.ones(5), 2, 1.0)
    assert lhs.mean == pytest.approx(0.25) and rhs == pytest.approx(1.0)


def test_small_ball_moment_bound_degenerate_pair(mid2):
    g = 4 * mid2.points[:, 0] ** 2
    lhs, rhs = lemma_1_1_margin(g, 1, 0.01)
    # r = 1 is an equality: E[1/(g+eps)] = eps^{-1} E[eps/(eps+g)]
    assert lhs.mean == pytest.approx(rhs, rel=1e-12)


def test_small_ball_interval():
    p = small_ball(np.linspace(0, 1, 1001), 0.25)
    assert p.lower <= p.p <= p.upper
    assert p.p == pytest.approx(251 / 1001)


def test_negative_moment_finite_and_divergent(big1):
    g = np.abs(big1.points[:, 0])
    m = negative_moment(g, 0.5)
    # E|Z|^{-1/2} = 2^{-1/4} Gamma(1/4) / sqrt(pi)
    exact = 2 ** -0.25 * math.gamma(0.25) / math.sqrt(math.pi)
    assert abs(m.estimate.mean - exact) <= 0.05 * exact
    with pytest.raises(MomentDiverged):
        negative_moment(g, 1.0)
    with pytest.raises(MomentDiverged):
        negative_moment(np.zeros(100), 0.5)


def test_sigma_large_t_is_total_mass():
    assert sigma_lower_density("normal", 20.0, cells=2048) == pytest.approx(1.0, abs=0.01)


def test_sigma_small_t_normal():
    s = sigma_lower_converged("normal", 0.05).lower
    assert abs(s - 0.05 * math.sqrt(2 / math.pi)) <= 0.1 * 0.05 * math.sqrt(2 / math.pi)


def test_sigma_small_t_samples(big1):
    mu = EmpiricalMeasure.uniform(big1.points)
    s = sigma_lower(mu, 0.05)
    assert abs(s - 0.05 * math.sqrt(2 / math.pi)) <= 0.1 * 0.05 * math.sqrt(2 / math.pi)


def test_sigma_of_wide_uniform():
    rho = get_density("uniform")
    # uniform on [0,1]: the ramp gives 2t for t <= 1/2
    assert sigma_lower_converged(rho, 0.05).lower == pytest.approx(0.1, rel=0.02)


def test_sigma_upper_examples(big1):
    assert sigma_upper(EmpiricalMeasure.dirac([0.0]), 1.0) == 12.0
    mu = EmpiricalMeasure.uniform(big1.points[:200_000])
    assert sigma_upper(mu, 0.1) == pytest.approx(SIX_TV_NORMAL_01, rel=0.05)
    assert sigma_upper("normal", 0.1) == pytest.approx(SIX_TV_NORMAL_01, rel=1e-9)


def test_sigma_sandwich_on_samples(mid2):
    mu = EmpiricalMeasure.uniform(mid2.points[:50_000])
    est = sigma_estimate(mu, 0.2)
    assert est.lower <= est.upper


@given(st.floats(1.0, 4.0), st.floats(0.02, 0.5))
def test_sigma_lp_scaling(s, t):
    mu = discretize("normal", 256)
    edges = np.linspace(-6, 6, 257)
    masses = np.histogram(mu.points[:, 0], bins=edges, weights=mu.weights)[0]
    assert sigma_lp(masses, edges, s * t) <= s * sigma_lp(masses, edges, t) + 1e-9


def test_besov_oracle_exponents():
    assert 0.95 <= besov_fit("normal", geometric_grid(0.02, 0.7)).alpha_hat <= 1.02
    assert 0.45 <= besov_fit("chi2_1", geometric_grid(0.02, 0.7)).alpha_hat <= 0.55
    assert 0.95 <= besov_fit("uniform", geometric_grid(0.0158, 0.5)).alpha_hat <= 1.02


def test_besov_fit_needs_span():
    with pytest.raises(ValueError):
        besov_fit("normal", [0.1, 0.2, 0.3, 0.4])
    with pytest.raises(DegenerateFit):
        # a tiny uniform sample: no shift rises 5x above its histogram error
        besov_fit(EmpiricalMeasure.uniform(np.linspace(0, 1, 20)), geometric_grid(1e-4, 1e-2))


def test_point_mass_has_zero_besov_order():
    fit = besov_fit(EmpiricalMeasure.uniform(np.zeros((100, 1))), geometric_grid(0.01, 1.0))
    assert fit.alpha_hat == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(fit.tv_values, 2.0)


def test_predicted_exponents():
    assert besov_alpha(10, 0.9) == pytest.approx(9 / 20.9)
    assert besov_alpha(16, 0.5, k=2) == pytest.approx(8 / 35.5)
    assert tv_kr_exponent(10, 0.9) == pytest.approx(9 / (2.9 * 10 + 0.9))
    a = besov_alpha(16, 0.5, 2)
    assert tv_kr_exponent(16, 0.5, 2) == pytest.approx(a / (1 + a))
    assert besov_alpha(10, 1e-9) < 1e-9


@given(arrays(np.float64, 50, elements=st.floats(0, 100)), st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_u_gamma_monotone_in_eps(g, e1, e2):
    lo, hi = sorted((e1, e2))
    assert u_gamma(g, lo).mean <= u_gamma(g, hi).mean + 1e-15


@given(arrays(np.float64, 50, elements=st.floats(0, 100)), arrays(np.float64, 50, elements=st.floats(0, 10)),
       st.floats(1e-3, 10))
def test_u_gamma_antitone_in_g(g, extra, eps):
    u1 = u_gamma(g, eps).mean
    u2 = u_gamma(g + extra, eps).mean
    assert u2 <= u1 + 1e-15
    assert 0.0 <= u2 <= 1.0


@given(arrays(np.float64, 40, elements=st.floats(0, 50)), st.floats(1e-2, 5))
def test_u_gamma_estimators_agree(g, eps):
    closed = u_gamma(g, eps).mean
    quad = u_gamma_quadrature(g, eps, nodes=1 << 14).mean
    # the midpoint rule misplaces each sample's jump by at most one node
    assert abs(closed - quad) <= 1.0 / (1 << 14) + 1e-12


@given(arrays(np.float64, 30, elements=st.floats(0, 20)), st.floats(1.0, 3.0), st.floats(1e-2, 2))
def test_small_ball_moment_bound_holds_for_any_sample(g, r, eps):
    lhs, rhs = lemma_1_1_margin(g, r, eps)
    assert lhs.mean <= rhs * (1 + 1e-12)
