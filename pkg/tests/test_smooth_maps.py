import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussreg.errors import ConfigParse, DimensionMismatch, UnknownMap
from gaussreg.gaussian_space import GaussianSpace, sample
from gaussreg.harness.identities import ou_symmetry_check
from gaussreg.smooth_maps import (CATALOG, affine_variant, eval_jet2, eval_jets, evaluate, get_map, hermite_map,
                                  linear_map, load_map, map_from_dict, map_to_dict, ornstein_uhlenbeck, ou_values,
                                  polynomial, resolve_map, sobolev_norm)

H3 = polynomial("h3", 1, [[((3,), 1.0), ((1,), -3.0)]])


def test_jets_of_x1_squared():
    j = eval_jet2(get_map("x1sq"), 0, [3.0])
    assert j.value == 9.0
    assert np.array_equal(j.gradient, [6.0])
    assert np.array_equal(j.hessian, [[2.0]])


def test_jets_of_x1x2():
    j = eval_jet2(get_map("x1x2"), 0, [1.0, 2.0])
    assert j.value == 2.0
    assert np.array_equal(j.gradient, [2.0, 1.0])
    assert np.array_equal(j.hessian, [[0.0, 1.0], [1.0, 0.0]])


def test_jets_of_cubic_hermite():
    j = eval_jet2(H3, 0, [1.0])
    assert (j.value, j.gradient[0], j.hessian[0, 0]) == (-2.0, 0.0, 6.0)


def test_ou_operator_values():
    assert ornstein_uhlenbeck(get_map("x1sq"), 0, [2.0]) == -6.0
    for x in (-1.3, 0.0, 2.5):
        assert ornstein_uhlenbeck(get_map("x1"), 0, [x]) == -x
    assert ornstein_uhlenbeck(H3, 0, [2.0]) == pytest.approx(-6.0, abs=1e-12)


@pytest.mark.parametrize("degree", range(1, 6))
def test_hermite_eigenrelation(degree):
    X = sample(GaussianSpace(1), 2000, 2).points
    mj = eval_jets(hermite_map(degree), X)
    lf = ou_values(mj, X)[:, 0]
    v = mj.value[:, 0]
    assert np.max(np.abs(lf + degree * v) / np.maximum(1, np.abs(v))) <= 1e-10


def test_sobolev_norm_of_x1(big1):
    n = sobolev_norm(get_map("x1"), 2, 1, big1)
    assert n.max.within(2.0)


def test_sobolev_norm_of_constant(big1):
    n = sobolev_norm(get_map("const_1"), 3.5, 2, big1)
    assert n.max.mean == pytest.approx(1.0, abs=1e-15)


def test_sobolev_norm_of_x1_squared(big1):
    n = sobolev_norm(get_map("x1sq"), 2, 2, big1)
    assert n.max.within(math.sqrt(3) + 4)


def test_sobolev_rejects_bad_p(big1):
    with pytest.raises(ValueError):
        sobolev_norm(get_map("x1"), 1.0, 1, big1)


def _fd_jets(spec, x, c, step):
    x = np.asarray(x, dtype=float)
    n = x.size
    f = lambda y: evaluate(spec, y[None, :])[0, c]
    g = np.zeros(n)
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
        for j in range(n):
            d = np.zeros(n)
            d[j] = step
            H[i, j] = (f(x + e + d) - f(x + e - d) - f(x - e + d) + f(x - e - d)) / (4 * step * step)
    return g, H


@pytest.mark.parametrize("name", ["x1sq_x2", "quad_offdiag", "cubic3", "sin_pair", "exp_mix", "he4"])
def test_jets_match_finite_differences(name):
    spec = get_map(name)
    x = sample(GaussianSpace(spec.dim_in), 1, 11).points[0]
    for c in range(spec.dim_out):
        j = eval_jet2(spec, c, x)
        errs = []
        for step in (1e-2, 5e-3):
            g, H = _fd_jets(spec, x, c, step)
            errs.append(max(np.max(np.abs(g - j.gradient)), np.max(np.abs(H - j.hessian))))
        # O(step^2): halving the step cuts the error about fourfold, or it is already at rounding
        assert errs[1] <= 1e-8 or errs[1] <= 0.35 * errs[0]


def test_ou_symmetry_on_catalog(mid2):
    for phi, psi in [("x1sq_n2", "sin_lin_n2"), ("x1x2", "x1x2"), ("quad_offdiag", "sin_x1_n2")]:
        check = ou_symmetry_check(get_map(phi), get_map(psi), mid2)
        assert check.outcome != "fail"


def test_catalog_minimum_contents():
    for name in ("x1", "x1_x2", "quad_diag_1_2", "x1sq_x2", "he5", "sin_lin_n2"):
        assert name in CATALOG


def test_unknown_map():
    with pytest.raises(UnknownMap):
        get_map("nope")
    with pytest.raises(UnknownMap):
        resolve_map("nope")


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evaluate(get_map("x1"), np.zeros((3, 2)))


def test_config_round_trip(tmp_path):
    spec = get_map("x1sq_x2")
    p = tmp_path / "m.json"
    p.write_text(json.dumps(map_to_dict(spec)))
    back = load_map(p)
    X = sample(GaussianSpace(2), 50, 4).points
    assert np.array_equal(evaluate(back, X), evaluate(spec, X))
    assert resolve_map(str(p)).dim_out == 2


def test_config_names_missing_field():
    with pytest.raises(ConfigParse, match="components"):
        map_from_dict({"dim_in": 1, "dim_out": 1})
    with pytest.raises(ConfigParse, match="components\\[0\\]"):
        map_from_dict({"dim_in": 1, "dim_out": 1, "components": [[[1, 2]]]})


def test_builtin_reference_in_config():
    assert map_from_dict({"builtin": "he2"}) is get_map("he2")


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_affine_variant_matches_evaluation(scale, offset):
    X = sample(GaussianSpace(2), 20, 9).points
    for name in ("x1sq_x2", "sin_pair"):
        spec = get_map(name)
        v = affine_variant(spec, scale, offset)
        assert np.allclose(evaluate(v, X), scale * evaluate(spec, X) + offset, rtol=1e-12, atol=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.floats(-2, 2))
def test_linear_map_jets_constant(a, b):
    spec = linear_map("lin", [a], [b])
    X = sample(GaussianSpace(2), 10, 1).points
    mj = eval_jets(spec, X)
    assert np.allclose(mj.grad[:, 0], a)
    assert np.all(mj.hess == 0)
