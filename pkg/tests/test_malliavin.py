import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussreg.gaussian_space import GaussianSpace, sample
from gaussreg.harness.identities import exact_identity_checks
from gaussreg.malliavin import (adjugate_cofactor, adjugate_residuals, chain_identity_residual,
                                chain_identity_terms, det_and_adjugate, det_small, grad_delta_bound_margin,
                                malliavin_at, malliavin_batch)
from gaussreg.smooth_maps import CATALOG, get_map, scalar_function


def test_identity_map():
    s = malliavin_at(get_map("x1_x2"), [0.3, -1.2])
    assert np.array_equal(s.M, np.eye(2))
    assert s.delta == 1.0
    assert np.array_equal(s.A, np.eye(2))
    assert np.array_equal(s.grad_delta, [0.0, 0.0])


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (-0.5, 2.0), (0.0, 3.0)])
def test_degenerate_pair(a, b):
    s = malliavin_at(get_map("x1sq_x2"), [a, b])
    assert np.allclose(s.M, np.diag([4 * a * a, 1.0]))
    assert s.delta == pytest.approx(4 * a * a)
    assert np.allclose(s.A, np.diag([1.0, 4 * a * a]))
    assert np.allclose(s.grad_delta, [8 * a, 0.0])


def test_sum_diff():
    s = malliavin_at(get_map("sum_diff"), [0.7, 0.1])
    assert np.allclose(s.M, 2 * np.eye(2))
    assert s.delta == pytest.approx(4.0)
    assert np.allclose(s.A, 2 * np.eye(2))


def test_chain_identity_examples():
    assert chain_identity_residual(get_map("x1_x2"), scalar_function("product", 2), [0.4, -2.0]) <= 1e-14
    lhs, rhs = chain_identity_terms(get_map("x1sq_x2"), scalar_function("sum", 2), np.array([[1.0, 1.0]]))
    assert np.allclose(lhs, [[4.0, 1.0]]) and np.allclose(rhs, [[4.0, 1.0]])
    lhs, rhs = chain_identity_terms(get_map("exp_mix"), scalar_function("constant", 2), np.array([[0.2, 0.5]]))
    assert np.all(lhs == 0) and np.all(rhs == 0)


def test_grad_delta_bound_examples():
    assert grad_delta_bound_margin(get_map("x1_x2"), 0, [1.0, 2.0]) == (0.0, 0.0)
    lhs, rhs = grad_delta_bound_margin(get_map("x1sq_x2"), 0, [1.0, 1.0])
    assert (lhs, rhs) == (pytest.approx(16.0), pytest.approx(324.0))
    lhs, _ = grad_delta_bound_margin(get_map("x1sq_x2"), 0, [0.0, 0.7])
    assert lhs == 0.0


@pytest.mark.parametrize("name", ["x1sq_x2", "sin_pair", "exp_mix", "cubic3", "sum_diff"])
def test_jacobi_formula_matches_finite_differences(name):
    spec = get_map(name)
    x = sample(GaussianSpace(spec.dim_in), 1, 5).points[0]
    g = malliavin_at(spec, x).grad_delta
    errs = []
    for step in (1e-3, 5e-4):
        fd = np.zeros(spec.dim_in)
        for i in range(spec.dim_in):
            e = np.zeros(spec.dim_in)
            e[i] = step
            fd[i] = (malliavin_at(spec, x + e).delta - malliavin_at(spec, x - e).delta) / (2 * step)
        errs.append(np.max(np.abs(fd - g)))
    assert errs[1] <= 1e-7 or errs[1] <= 0.35 * errs[0]


def test_catalog_exact_identities():
    X = {d: sample(GaussianSpace(d), 2000, 9, d).points for d in (1, 2, 3)}
    rows = exact_identity_checks(X)
    assert rows and all(r.verdict == "pass" for r in rows)


def test_rank_deficient_map_has_zero_determinant():
    X = sample(GaussianSpace(1), 500, 1).points
    assert np.max(np.abs(malliavin_batch(get_map("x1_x1_n1"), X).delta)) <= 1e-12


@given(arrays(np.float64, (3, 4), elements=st.floats(-3, 3)))
def test_gram_determinant_nonnegative(G):
    M = G @ G.T
    d = det_small(M[None])[0]
    assert d >= -1e-12 * np.prod(np.sum(G * G, axis=1))


@given(st.integers(1, 4), st.integers(0, 10_000))
def test_small_determinant_and_adjugate(k, seed):
    M = np.random.default_rng(seed).normal(size=(3, k, k))
    assert np.allclose(det_small(M), np.linalg.det(M), atol=1e-10)
    A = adjugate_cofactor(M)
    assert np.allclose(A @ M, det_small(M)[:, None, None] * np.eye(k), atol=1e-10)


@given(st.integers(0, 10_000))
def test_large_k_lu_path_agrees_with_cofactors(seed):
    G = np.random.default_rng(seed).normal(size=(2, 5, 6))
    M = G @ G.transpose(0, 2, 1)
    det, A = det_and_adjugate(M)
    ref = adjugate_cofactor(M, det=np.linalg.det)
    assert np.allclose(A, ref, rtol=1e-8, atol=1e-8 * np.abs(ref).max())


def test_adjugate_residual_on_every_catalog_map():
    for spec in CATALOG.values():
        X = sample(GaussianSpace(spec.dim_in), 300, 2).points
        assert np.max(adjugate_residuals(malliavin_batch(spec, X))) <= 1e-10
