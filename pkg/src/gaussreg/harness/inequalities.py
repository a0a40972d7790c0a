"""Inequalities with explicit constants, and the distance oracles they rest on.

Covers the small-ball functional u_gamma (two estimators and closed forms),
the negative-moment bound int (g+eps)^{-r} <= r eps^{-r} u_gamma(g, eps),
the TV / KR / Kantorovich oracles, the shift-modulus sandwich
||mu_h - mu||_TV <= 2 sigma(mu, |h|/2) and sigma(mu, t) <= 6k sup ||mu_h - mu||_TV,
and the TV interpolation bound 3 sqrt(k) sigma(mu - nu, eps) + sqrt(k) eps^{-1} ||mu - nu||.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats

from ..errors import DegenerateFit
from ..gaussian_space import SampleBatch, estimate
from ..malliavin import malliavin_batch
from ..measures import (EmpiricalMeasure, OracleDensity, difference, get_density, kantorovich_cdf_1d,
                        kantorovich_norm, kr_norm, primal_transport_cost, pushforward, shift, tv_distance,
                        tv_shift_closed_form, tv_shift_oracle_1d)
from ..smooth_maps import eval_jets, get_map
from ..smoothness import (SigmaEstimate, UGammaEstimate, lemma_1_1_margin, shift_tv, sigma_lower,
                          sigma_lower_converged, sigma_lp, sup_shift_tv, u_gamma, u_gamma_quadrature,
                          u_gamma_quadrature_values)
from .checks import BoundCheck
from .runner import stream_id

EXACT_TOL = 1e-12
SLACK = 1.05  # multiplicative allowance on the constants 2 and 6k
GRID_T = (0.05, 0.1, 0.2, 0.5)
EPSILONS = (1.0, 0.1, 0.01)


# --------------------------------------------------------------------------
# g functions built from catalog maps


def gradient_norm(name: str, X: np.ndarray) -> np.ndarray:
    """|grad f|_H for a scalar catalog map."""
    spec = get_map(name)
    if spec.dim_out != 1:
        raise ValueError(f"{name} is not scalar")
    return np.linalg.norm(eval_jets(spec, X).grad[:, 0], axis=1)


def degeneracy(name: str, X: np.ndarray) -> np.ndarray:
    """Delta_f = det M_f, clipped at 0 against rounding."""
    return np.maximum(malliavin_batch(get_map(name), X).delta, 0.0)


def g_values(kind: str, name: str, X: np.ndarray) -> np.ndarray:
    return gradient_norm(name, X) if kind == "grad" else degeneracy(name, X)


# --------------------------------------------------------------------------
# u_gamma


def u_gamma_constant_checks(constants=(0.0, 0.5, 1.0, 2.0), epsilons=EPSILONS, count: int = 1000) -> list[BoundCheck]:
    """u_gamma(c, eps) = eps / (eps + c) for constant g, on both estimators."""
    out = []
    for c in constants:
        g = np.full(count, c)
        for eps in epsilons:
            exact = eps / (eps + c)
            closed = u_gamma(g, eps)
            out.append(BoundCheck("u_gamma_const[closed-form]", closed.mean, exact,
                                  params={"c": c, "eps": eps}, kind="identity", tol=EXACT_TOL))
            quad = u_gamma_quadrature(g, eps)
            out.append(BoundCheck("u_gamma_const[quadrature]", quad.mean, exact, quad.error, 0.0,
                                  params={"c": c, "eps": eps, "nodes": 65536.0}, kind="identity"))
    return out


def u_gamma_abs_normal(scale: float, eps: float) -> float:
    """E[eps / (eps + scale |Z|)] by adaptive quadrature, Z ~ N(0,1)."""
    val, _ = integrate.quad(lambda z: 2.0 * eps / (eps + scale * z) * stats.norm.pdf(z), 0.0, np.inf,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


def u_gamma_oracle_checks(batch: SampleBatch, epsilons=EPSILONS) -> list[BoundCheck]:
    """Closed-form estimator against quadrature for g = |grad f| with f in {x1sq, he2}.

    |grad x1^2| = 2|x1| and |grad He_2| = 2|x1|, so u_gamma is E[eps/(eps + 2|Z|)].
    """
    out = []
    for name in ("x1sq", "he2"):
        g = gradient_norm(name, batch.points)
        for eps in epsilons:
            est = u_gamma(g, eps)
            ref = u_gamma_abs_normal(2.0, eps)
            out.append(BoundCheck(f"u_gamma_oracle[{name}]", est.mean, ref, est.error, 0.0,
                                  params={"eps": eps, "N": float(g.size)}, kind="identity"))
    return out


UGAMMA_PATH_CASES = [("grad", "x1sq"), ("grad", "he3"), ("grad", "tanh_x1"), ("grad", "x1_plus_sin_x2"),
                     ("delta", "x1sq_x2"), ("delta", "sin_pair"), ("delta", "exp_mix")]


def u_gamma_path_checks(batch_by_dim: dict, cases=UGAMMA_PATH_CASES, epsilons=EPSILONS,
                        nodes: int = 1 << 16) -> list[BoundCheck]:
    """The closed-form and definitional estimators agree on the same samples.

    The error is the stderr of the paired per-sample difference plus the
    midpoint-rule bound.
    """
    out = []
    for kind, name in cases:
        X = batch_by_dim[get_map(name).dim_in].points
        g = g_values(kind, name, X)
        for eps in epsilons:
            per_c = eps / (eps + g)
            per_q = u_gamma_quadrature_values(g, eps, nodes)
            closed = u_gamma(g, eps)
            quad = UGammaEstimate(eps, estimate(per_q), "quadrature", 0.5 / nodes)
            paired = estimate(per_c - per_q).stderr
            out.append(BoundCheck(f"u_gamma_paths[{kind}:{name}]", closed.mean, quad.mean, closed.error, quad.error,
                                  params={"eps": eps, "N": float(g.size)}, kind="identity",
                                  err=float(math.hypot(paired, quad.quadrature_error))))
    return out


# --------------------------------------------------------------------------
# negative moments


def lemma_1_1_zero_checks(rs=(1.0, 2.0), epsilons=EPSILONS) -> list[BoundCheck]:
    """g = 0: lhs = eps^{-r}, rhs = r eps^{-r}; equality when r = 1."""
    out = []
    g = np.zeros(16)
    for r in rs:
        for eps in epsilons:
            lhs, rhs = lemma_1_1_margin(g, r, eps)
            kind = "identity" if r == 1 else "bound"
            out.append(BoundCheck("lemma_1_1[g=0]", lhs.mean, rhs, params={"r": r, "eps": eps}, kind=kind,
                                  tol=EXACT_TOL * max(1.0, rhs)))
    return out


LEMMA_1_1_CASES = [("grad", "x1"), ("grad", "x1sq"), ("grad", "he3"), ("grad", "tanh_x1"),
                   ("grad", "x1_plus_sin_x2"), ("delta", "x1_x2"), ("delta", "x1sq_x2"), ("delta", "exp_mix")]


def lemma_1_1_checks(batch_by_dim: dict, cases=LEMMA_1_1_CASES, rs=(1.0, 2.0), epsilons=EPSILONS) -> list[BoundCheck]:
    out = []
    for kind, name in cases:
        X = batch_by_dim[get_map(name).dim_in].points
        g = g_values(kind, name, X)
        for r in rs:
            for eps in epsilons:
                lhs, rhs = lemma_1_1_margin(g, r, eps)
                u = u_gamma(g, eps)
                # r = 1 is an equality for every g; allow for rounding only
                out.append(BoundCheck(f"lemma_1_1[{kind}:{name}]", lhs.mean, rhs, lhs.stderr,
                                      r * eps ** (-r) * u.error, params={"r": r, "eps": eps, "N": float(g.size)},
                                      tol=EXACT_TOL * max(1.0, rhs)))
    return out


# --------------------------------------------------------------------------
# distances


def tv_normal_shift_check(batch: SampleBatch, h: float = 1.0, rel_tol: float = 0.02) -> BoundCheck:
    """Histogram TV of N(0,1) against N(h,1) within rel_tol of 4 Phi(h/2) - 2."""
    mu = pushforward(get_map("x1"), batch)
    nu = shift(mu, [h])
    rep = tv_distance(nu, mu)
    exact = tv_shift_closed_form("normal", h)
    return BoundCheck("tv_normal_shift", abs(rep.value - exact), rel_tol * exact,
                      params={"h": h, "N": float(batch.count), "tv": rep.value, "exact": exact,
                              "width": rep.resolution, "refined": rep.refined_value})


def tv_independent_normal_check(batch_a: SampleBatch, batch_b: SampleBatch, rel_tol: float = 0.02) -> BoundCheck:
    """Same comparison with independent samples through the maps x1 and x1 + 1."""
    mu = pushforward(get_map("x1"), batch_a)
    nu = pushforward(get_map("x1_shift_1"), batch_b)
    rep = tv_distance(mu, nu)
    exact = tv_shift_closed_form("normal", 1.0)
    return BoundCheck("tv_normal_independent", abs(rep.value - exact), rel_tol * exact,
                      params={"N": float(batch_a.count), "tv": rep.value, "exact": exact, "width": rep.resolution})


def two_point(h) -> EmpiricalMeasure:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    return EmpiricalMeasure(np.vstack([np.zeros_like(h), h]), np.array([1.0, -1.0]))


TWO_POINT_SHIFTS = [[0.1], [0.5], [1.0], [1.5], [2.0], [3.0], [10.0], [0.3, 0.4], [1.2, -1.6], [3.0, 4.0]]


def two_point_checks(shifts=TWO_POINT_SHIFTS) -> list[BoundCheck]:
    """||delta_0 - delta_h||_KR = min(|h|, 2) and ||delta_0 - delta_h||_K = |h|."""
    out = []
    for h in shifts:
        omega = two_point(h)
        norm = float(np.linalg.norm(h))
        params = {"h": norm, "k": float(len(h))}
        out.append(BoundCheck("kr_two_point", kr_norm(omega).value, min(norm, 2.0), params=params,
                              kind="identity", tol=1e-9))
        out.append(BoundCheck("kantorovich_two_point", kantorovich_norm(omega).value, norm, params=params,
                              kind="identity", tol=1e-9))
    return out


def random_balanced(size: int, dim: int, seed: int, sid: int) -> EmpiricalMeasure:
    from ..gaussian_space import rng

    g = rng(seed, sid)
    pts = g.normal(size=(size, dim)) * 1.5
    w = g.random(size) + 0.05
    half = size // 2
    w[:half] /= w[:half].sum()
    w[half:] /= -w[half:].sum()
    return EmpiricalMeasure(pts, w)


def lp_primal_checks(seed: int = 1, sizes=(2, 4, 7, 12), dims=(1, 2, 3), reps: int = 3) -> list[BoundCheck]:
    """LP duals against network-simplex transport on small balanced measures."""
    out = []
    for dim in dims:
        for size in sizes:
            for rep in range(reps):
                omega = random_balanced(size, dim, seed, stream_id(f"lp_primal:{dim}:{size}:{rep}"))
                params = {"k": float(dim), "support": float(size), "rep": float(rep)}
                out.append(BoundCheck("kr_lp_vs_primal", kr_norm(omega).value, primal_transport_cost(omega, cap=2.0),
                                      params=params, kind="identity", tol=1e-7))
                kv = kantorovich_norm(omega).value
                out.append(BoundCheck("kantorovich_lp_vs_primal", kv, primal_transport_cost(omega),
                                      params=params, kind="identity", tol=1e-7))
                if dim == 1:
                    out.append(BoundCheck("kantorovich_lp_vs_cdf", kv, kantorovich_cdf_1d(omega),
                                          params=params, kind="identity", tol=1e-9))
    return out


# --------------------------------------------------------------------------
# shift modulus sandwich (k = 1, oracle densities)


def thm_2_1_check(density: str | OracleDensity, grid=GRID_T, slack: float = SLACK) -> list[BoundCheck]:
    """Both sides of the shift-modulus sandwich with constants 2 and 6 (k = 1).

    sigma is the converged grid LP on exact cell masses; TV is quadrature.
    """
    rho = get_density(density) if isinstance(density, str) else density
    out = [BoundCheck("thm_2_1_tv_le_2sigma", 0.0, 0.0, params={"h": 0.0}, kind="bound")]
    for h in grid:
        tv = tv_shift_oracle_1d(rho, h)
        sig = sigma_lower_converged(rho, abs(h) / 2)
        out.append(BoundCheck(f"thm_2_1_tv_le_2sigma[{rho.name}]", tv, slack * 2.0 * sig.lower,
                              params={"h": h, "t": abs(h) / 2, "slack": slack, "sigma": sig.lower,
                                      "cells": float(sig.cells)}))
    for t in grid:
        sig = sigma_lower_converged(rho, t)
        sup = sup_shift_tv(rho, t)
        out.append(BoundCheck(f"thm_2_1_sigma_le_6sup[{rho.name}]", sig.lower, slack * 6.0 * sup,
                              params={"t": t, "k": 1.0, "slack": slack, "sup_tv": sup, "cells": float(sig.cells)}))
    return out


# --------------------------------------------------------------------------
# TV interpolation through sigma of the difference


def _signed_shift_masses(rho: OracleDensity, h: float, edges: np.ndarray) -> np.ndarray:
    """Cell masses of rho - rho(. - h), i.e. mu - nu with nu = mu shifted by +h."""
    return rho.cell_masses(edges) - rho.cell_masses(edges - h)


def _pair_edges(rho: OracleDensity, h: float, cells: int, q: float = 1e-6) -> np.ndarray:
    lo = rho.support[0] if np.isfinite(rho.support[0]) else float(rho.ppf(q))
    hi = rho.support[1] if np.isfinite(rho.support[1]) else float(rho.ppf(1.0 - q))
    return np.linspace(min(lo, lo + h), max(hi, hi + h), cells + 1)


def sigma_shift_pair(rho: OracleDensity, h: float, t: float, cells: int = 512, rtol: float = 0.01,
                     max_cells: int = 1 << 16) -> SigmaEstimate:
    """Converged sigma(mu - mu_h, t) for an oracle density, by grid doubling."""
    history = []
    G = cells
    while True:
        edges = _pair_edges(rho, h, G)
        history.append(sigma_lp(_signed_shift_masses(rho, h, edges), edges, t))
        if len(history) >= 2 and abs(history[-1] - history[-2]) <= rtol * max(abs(history[-1]), 1e-300):
            return SigmaEstimate(float(t), history[-1], math.nan, 1, G, tuple(history))
        G *= 2
        if G > max_cells:
            raise DegenerateFit(f"sigma of the difference at t={t} not converged: {history}")


def _pair_atoms(rho: OracleDensity, h: float, cells: int = 4096) -> tuple[EmpiricalMeasure, float]:
    """mu - mu_h as atoms at cell centres; every atom moved by at most half a cell."""
    edges = _pair_edges(rho, h, cells, q=1e-9)
    mids = 0.5 * (edges[:-1] + edges[1:])
    m = _signed_shift_masses(rho, h, edges)
    m -= m.sum() / m.size  # truncated tails: rebalance to exact zero mass
    return EmpiricalMeasure(mids, m), float(edges[1] - edges[0])


LEMMA_2_1_PAIRS = [("normal", 0.3), ("chi2_1", 0.3), ("uniform", 0.3), ("normal", 1.0)]
LEMMA_2_1_EPS = (0.05, 0.1, 0.2, 0.5, 1.0)


def _interpolation_oracle(metric: str, pairs, epsilons) -> list[BoundCheck]:
    name = "lemma_2_1" if metric == "kr" else "kantorovich_remark"
    out = [BoundCheck(f"{name}[mu=nu]", 0.0, 0.0, params={"k": 1.0})]
    for dens, h in pairs:
        rho = get_density(dens)
        tv = tv_shift_oracle_1d(rho, h)
        atoms, width = _pair_atoms(rho, h)
        if metric == "kr":
            dist = kr_norm(atoms).value
        else:
            dist = kantorovich_norm(atoms).value
        # snapping atoms to cell centres moves each by <= width / 2
        dist_err = width * atoms.total_variation_mass / 2
        for eps in epsilons:
            sig = sigma_shift_pair(rho, h, eps)
            rhs = 3.0 * sig.lower + dist / eps
            out.append(BoundCheck(f"{name}[{dens},h={h}]", tv, rhs, 0.0, dist_err / eps,
                                  params={"k": 1.0, "h": h, "eps": eps, "sigma": sig.lower, metric: dist,
                                          "cells": float(sig.cells)}))
    return out


def lemma_2_1_check(pairs=LEMMA_2_1_PAIRS, epsilons=LEMMA_2_1_EPS) -> list[BoundCheck]:
    """k = 1 oracle mode: asserted, with converged sigma of the signed difference."""
    return _interpolation_oracle("kr", pairs, epsilons)


def kantorovich_remark_check(pairs=LEMMA_2_1_PAIRS, epsilons=LEMMA_2_1_EPS) -> list[BoundCheck]:
    return _interpolation_oracle("kantorovich", pairs, epsilons)


def interpolation_check_kd(mu: EmpiricalMeasure, nu: EmpiricalMeasure, epsilons, metric: str = "kr",
                           max_support: int = 400, label: str = "") -> list[BoundCheck]:
    """k >= 2 diagnostic mode: sigma is only a lower bound, so rows are reported, not asserted."""
    k = mu.dim
    tv = tv_distance(mu, nu)
    omega = difference(mu, nu)
    d = kr_norm(omega, max_support) if metric == "kr" else kantorovich_norm(omega, max_support)
    name = "lemma_2_1" if metric == "kr" else "kantorovich_remark"
    out = []
    for eps in epsilons:
        sig = sigma_lower(omega, eps)
        rhs = 3.0 * math.sqrt(k) * sig + math.sqrt(k) * d.value / eps
        out.append(BoundCheck(f"{name}[k={k}{label}]", tv.value, rhs, tv.error or 0.0,
                              math.sqrt(k) * (d.error or 0.0) / eps,
                              params={"k": float(k), "eps": eps, "sigma_lower": sig, metric: d.value},
                              asserted=False))
    return out


def interpolation_kd_gaussian(batch: SampleBatch, h=(0.3, 0.0), epsilons=(0.1, 0.5, 1.0),
                              metric: str = "kr") -> list[BoundCheck]:
    mu = EmpiricalMeasure.uniform(batch.points)
    nu = shift(mu, h)
    return interpolation_check_kd(mu, nu, epsilons, metric, label=f",h={tuple(float(v) for v in h)}")


# --------------------------------------------------------------------------
# exit-status fixture


def forced_fail_check() -> list[BoundCheck]:
    """An intentionally false inequality: TV(N(0,1), N(1,1)) <= TV / 2."""
    tv = tv_shift_closed_form("normal", 1.0)
    return [BoundCheck("forced_fail", tv, tv / 2, params={"h": 1.0})]


def shift_tv_normal_row(batch: SampleBatch, h: float) -> BoundCheck:
    """Report-only comparison of the aligned-grid shift TV with the closed form."""
    mu = pushforward(get_map("x1"), batch)
    rep = shift_tv(mu, [h])
    return BoundCheck("shift_tv_normal", rep.value, tv_shift_closed_form("normal", h), rep.error or 0.0,
                      params={"h": h}, kind="identity", asserted=False)
