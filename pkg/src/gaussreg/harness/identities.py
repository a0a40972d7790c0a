"""Exact pointwise identities and the Gaussian integration-by-parts identities.

The pointwise checks (adjugate, chain rule through M_f, Gram positivity,
Hermite eigenrelation, gradient-of-determinant bound) hold to rounding
error.  The IBP identities hold in expectation; both sides are estimated on
the same batch and compared against the stderr of their paired difference.
"""

from __future__ import annotations

import numpy as np

from ..gaussian_space import SampleBatch, estimate
from ..malliavin import (adjugate_residuals, chain_identity_residuals, grad_delta_bound_terms, malliavin_batch,
                         malliavin_from_jets)
from ..smooth_maps import CATALOG, SCALAR_FUNCTIONS, MapJets, MapSpec, eval_jets, get_map, hermite_map, ou_values
from .checks import BoundCheck

IDENTITY_TOL = 1e-10


def _require_scalar(spec: MapSpec, role: str) -> None:
    if spec.dim_out != 1:
        raise ValueError(f"{role} must be scalar-valued, {spec.name} has k={spec.dim_out}")


def _same_dim(*specs: MapSpec) -> int:
    dims = {s.dim_in for s in specs}
    if len(dims) != 1:
        raise ValueError(f"maps live on different spaces: {[s.name for s in specs]}")
    return dims.pop()


# --------------------------------------------------------------------------
# pointwise identities


def adjugate_check(spec: MapSpec, X: np.ndarray) -> BoundCheck:
    res = adjugate_residuals(malliavin_batch(spec, X))
    return BoundCheck(f"adjugate[{spec.name}]", float(np.max(res)), IDENTITY_TOL,
                      params={"points": float(X.shape[0]), "k": float(spec.dim_out)})


def chain_check(spec: MapSpec, phi_name: str, X: np.ndarray) -> BoundCheck:
    phi = SCALAR_FUNCTIONS[phi_name](spec.dim_out)
    res = chain_identity_residuals(spec, phi, X)
    return BoundCheck(f"chain[{spec.name},{phi_name}]", float(np.max(res)), IDENTITY_TOL,
                      params={"points": float(X.shape[0]), "k": float(spec.dim_out)})


def gram_check(spec: MapSpec, X: np.ndarray) -> BoundCheck:
    """delta >= -1e-12 prod |grad f_i|^2 (Gram determinants are nonnegative)."""
    mb = malliavin_batch(spec, X)
    scale = np.prod(mb.grad_norms**2, axis=1)
    worst = float(np.max(-mb.delta - 1e-12 * scale))
    return BoundCheck(f"gram_positivity[{spec.name}]", worst, 0.0, params={"points": float(X.shape[0])})


def rank_check(spec: MapSpec, X: np.ndarray) -> BoundCheck:
    """k > n forces delta = 0 up to rounding."""
    mb = malliavin_batch(spec, X)
    scale = np.maximum(1.0, np.prod(mb.grad_norms**2, axis=1))
    return BoundCheck(f"rank_deficient[{spec.name}]", float(np.max(np.abs(mb.delta) / scale)), IDENTITY_TOL,
                      params={"k": float(spec.dim_out), "n": float(spec.dim_in)})


def hermite_eigen_check(degree: int, X: np.ndarray) -> BoundCheck:
    """L He_m = -m He_m, relative to max(1, |He_m|)."""
    spec = hermite_map(degree)
    mj = eval_jets(spec, X)
    lf = ou_values(mj, X)[:, 0]
    v = mj.value[:, 0]
    res = np.abs(lf + degree * v) / np.maximum(1.0, np.abs(v))
    return BoundCheck(f"hermite_eigen[he{degree}]", float(np.max(res)), IDENTITY_TOL, params={"m": float(degree)})


def grad_delta_bound_check(spec: MapSpec, j: int, X: np.ndarray) -> BoundCheck:
    """max over points of |<grad f_j, grad Delta>| - 2 (sum |grad f_m|)^{2k} sum |D^2 f_i|_HS."""
    mb = malliavin_batch(spec, X)
    lhs, rhs = grad_delta_bound_terms(mb, j)
    scale = np.maximum(1.0, rhs)
    worst = float(np.max((lhs - rhs) / scale))
    return BoundCheck(f"grad_delta_bound[{spec.name},j={j}]", worst, IDENTITY_TOL,
                      params={"j": float(j), "k": float(spec.dim_out), "max_ratio": float(np.max(lhs / scale))})


def exact_identity_checks(X_by_dim: dict[int, np.ndarray], maps=None) -> list[BoundCheck]:
    maps = list(CATALOG.values()) if maps is None else maps
    out = []
    for spec in maps:
        X = X_by_dim[spec.dim_in]
        out.append(adjugate_check(spec, X))
        for phi in SCALAR_FUNCTIONS:
            out.append(chain_check(spec, phi, X))
        out.append(gram_check(spec, X))
        if spec.dim_out > spec.dim_in:
            out.append(rank_check(spec, X))
        if spec.dim_out >= 2:
            for j in range(spec.dim_out):
                out.append(grad_delta_bound_check(spec, j, X))
    for m in range(1, 6):
        out.append(hermite_eigen_check(m, X_by_dim[1]))
    return out


# --------------------------------------------------------------------------
# integration by parts


def ibp_1d_values(fj: MapJets, gj: MapJets, X: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample integrands of

    int <grad g, grad f> / (|grad f|^2 + eps^2)
      = -int g (Lf / (|grad f|^2 + eps^2) - 2 <D^2f grad f, grad f> / (|grad f|^2 + eps^2)^2).
    """
    gf = fj.grad[:, 0]
    gg = gj.grad[:, 0]
    denom = np.einsum("ni,ni->n", gf, gf) + epsilon**2
    lhs = np.einsum("ni,ni->n", gg, gf) / denom
    lf = ou_values(fj, X)[:, 0]
    quad = np.einsum("ni,nij,nj->n", gf, fj.hess[:, 0], gf)
    rhs = -gj.value[:, 0] * (lf / denom - 2.0 * quad / denom**2)
    return lhs, rhs


def _identity_from_values(name: str, lhs: np.ndarray, rhs: np.ndarray, params: dict) -> BoundCheck:
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        from ..errors import NonFiniteValue

        raise NonFiniteValue(f"{name}: non-finite integrand")
    el, er, ed = estimate(lhs), estimate(rhs), estimate(lhs - rhs)
    return BoundCheck(name, el.mean, er.mean, el.stderr, er.stderr, dict(params, N=float(lhs.size)),
                      kind="identity", err=ed.stderr)


def ibp_identity_1d(f: MapSpec, g: MapSpec, epsilon: float, batch: SampleBatch) -> BoundCheck:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _require_scalar(f, "f")
    _require_scalar(g, "g")
    _same_dim(f, g)
    X = batch.points
    lhs, rhs = ibp_1d_values(eval_jets(f, X), eval_jets(g, X), X, epsilon)
    return _identity_from_values(f"ibp_1d[f={f.name},g={g.name}]", lhs, rhs, {"eps": float(epsilon)})


def ibp_kd_values(fj: MapJets, uj: MapJets, vj: MapJets, j: int, X: np.ndarray,
                  epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample integrands of

    int <grad u, grad f_j> v / (Delta + eps)
      = -int u (v L f_j / (Delta + eps) - v <grad f_j, grad Delta> / (Delta + eps)^2
                + <grad f_j, grad v> / (Delta + eps)).
    """
    mb = malliavin_from_jets(fj)
    d = mb.delta + epsilon
    gfj = fj.grad[:, j]
    u, v = uj.value[:, 0], vj.value[:, 0]
    lhs = np.einsum("ni,ni->n", uj.grad[:, 0], gfj) * v / d
    lfj = ou_values(fj, X)[:, j]
    cross = np.einsum("ni,ni->n", gfj, mb.grad_delta)
    gv = np.einsum("ni,ni->n", gfj, vj.grad[:, 0])
    rhs = -u * (v * lfj / d - v * cross / d**2 + gv / d)
    return lhs, rhs


def ibp_identity_kd(f: MapSpec, u: MapSpec, v: MapSpec, j: int, epsilon: float, batch: SampleBatch) -> BoundCheck:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _require_scalar(u, "u")
    _require_scalar(v, "v")
    _same_dim(f, u, v)
    if not 0 <= j < f.dim_out:
        raise IndexError(f"component {j} out of range for k={f.dim_out}")
    X = batch.points
    lhs, rhs = ibp_kd_values(eval_jets(f, X), eval_jets(u, X), eval_jets(v, X), j, X, epsilon)
    return _identity_from_values(f"ibp_kd[f={f.name},u={u.name},v={v.name},j={j}]", lhs, rhs,
                                 {"eps": float(epsilon), "j": float(j)})


IBP_1D_PAIRS = [
    ("x1", "x1"),
    ("x1sq", "x1"),
    ("he3", "sin_x1"),
    ("x1_plus_half_x1sq", "he2"),
    ("tanh_x1", "x1sq"),
    ("x1sq_n2", "x2_n2"),
    ("x1_n2", "const_1_n2"),
    ("lin_3_4", "sin_lin_n2"),
    ("x1x2", "x1sq_n2"),
    ("x1_plus_sin_x2", "sin_lin_n2"),
]

IBP_KD_TRIPLES = [
    ("x1_x2", "x1_n2", "x1_n2", 0),
    ("x1_x2", "const_1_n2", "x2_n2", 1),
    ("x1sq_x2", "sin_x1_n2", "const_1_n2", 0),
    ("x1sq_x2", "sin_lin_n2", "x2_n2", 1),
    ("sum_diff", "sin_x1_n2", "x1sq_n2", 0),
    ("sin_pair", "sin_lin_n2", "x1_n2", 1),
    ("exp_mix", "sin_x1_n2", "x2_n2", 0),
]

IBP_EPSILONS = (1.0, 0.1, 0.01)


def ibp_1d_sweep(f_name: str, g_name: str, batch: SampleBatch, epsilons=IBP_EPSILONS) -> list[BoundCheck]:
    f, g = get_map(f_name), get_map(g_name)
    X = batch.points
    fj, gj = eval_jets(f, X), eval_jets(g, X)
    out = []
    for eps in epsilons:
        lhs, rhs = ibp_1d_values(fj, gj, X, eps)
        out.append(_identity_from_values(f"ibp_1d[f={f_name},g={g_name}]", lhs, rhs, {"eps": float(eps)}))
    return out


def ibp_kd_sweep(f_name: str, u_name: str, v_name: str, j: int, batch: SampleBatch,
                 epsilons=IBP_EPSILONS) -> list[BoundCheck]:
    f, u, v = get_map(f_name), get_map(u_name), get_map(v_name)
    X = batch.points
    fj, uj, vj = eval_jets(f, X), eval_jets(u, X), eval_jets(v, X)
    out = []
    for eps in epsilons:
        lhs, rhs = ibp_kd_values(fj, uj, vj, j, X, eps)
        out.append(_identity_from_values(f"ibp_kd[f={f_name},u={u_name},v={v_name},j={j}]", lhs, rhs,
                                         {"eps": float(eps), "j": float(j)}))
    return out


def ou_symmetry_check(phi: MapSpec, psi: MapSpec, batch: SampleBatch) -> BoundCheck:
    """E[psi L phi] = -E[<grad psi, grad phi>] for scalar maps."""
    X = batch.points
    pj, qj = eval_jets(phi, X), eval_jets(psi, X)
    lhs = qj.value[:, 0] * ou_values(pj, X)[:, 0]
    rhs = -np.einsum("ni,ni->n", qj.grad[:, 0], pj.grad[:, 0])
    return _identity_from_values(f"ou_symmetry[phi={phi.name},psi={psi.name}]", lhs, rhs, {})
