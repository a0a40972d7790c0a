"""Empirical measures on R^k, shifts, and the TV / KR / Kantorovich norms.

The TV norm uses the convention in which a probability measure has norm 1,
so two mutually singular probability laws are at distance 2.  TV between
empirical measures is estimated on a common histogram grid; KR and
Kantorovich norms are exact finite linear programs over the (possibly
grid-coarsened) support.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy import integrate, optimize, stats

from .errors import (DimensionMismatch, EmptyMeasure, LpInfeasible, MassNotBalanced, NonFiniteValue,
                     SupportTooLarge, UnknownDensity)
from .gaussian_space import SampleBatch
from .smooth_maps import MapSpec, evaluate

DEFAULT_MAX_SUPPORT = 2000  # all-pairs LP (k >= 2)
DEFAULT_MAX_SUPPORT_1D = 10000  # adjacent-pair LP on the line
_MAX_CELLS = 50_000_000


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    points: np.ndarray  # (m, k)
    weights: np.ndarray  # (m,), signed allowed

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise DimensionMismatch(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise NonFiniteValue("measure has non-finite points or weights")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        m = pts.shape[0]
        if m == 0:
            raise EmptyMeasure("no points")
        return cls(pts, np.full(m, 1.0 / m))

    @classmethod
    def dirac(cls, x) -> "EmpiricalMeasure":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)), np.ones(1))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def total_variation_mass(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def is_probability(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.weights >= 0) and abs(self.total_mass - 1.0) <= tol)

    def __sub__(self, other: "EmpiricalMeasure") -> "EmpiricalMeasure":
        return difference(self, other)

    def project(self, direction) -> np.ndarray:
        e = np.asarray(direction, dtype=float).ravel()
        return self.points @ e


@dataclass(frozen=True, eq=False)
class GridDensity:
    origin: np.ndarray
    cell_width: np.ndarray  # per-axis widths
    masses: np.ndarray  # k-dimensional array of (signed) cell masses


@dataclass(frozen=True)
class DistanceReport:
    value: float
    method: str  # "histogram" | "lp" | "closed-form" | "quadrature"
    resolution: float  # bin width (histogram) or support size (lp)
    error: float | None = None
    refined_value: float | None = None
    extra: dict = field(default_factory=dict, compare=False)


def pushforward(spec: MapSpec, batch: SampleBatch) -> EmpiricalMeasure:
    """The empirical image measure gamma o f^{-1} carried by the batch."""
    if spec.dim_in != batch.dim:
        raise DimensionMismatch(f"{spec.name} expects R^{spec.dim_in} inputs, batch lives in R^{batch.dim}")
    vals = evaluate(spec, batch.points)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue(f"{spec.name}: non-finite image points")
    return EmpiricalMeasure.uniform(vals)


def shift(mu: EmpiricalMeasure, h) -> EmpiricalMeasure:
    """mu_h(A) = mu(A - h): every atom moves by +h."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape[0] != mu.dim:
        raise DimensionMismatch(f"shift of length {h.shape[0]} for a measure on R^{mu.dim}")
    return EmpiricalMeasure(mu.points + h, mu.weights)


def difference(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> EmpiricalMeasure:
    """The signed measure mu - nu."""
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"measures live on R^{mu.dim} and R^{nu.dim}")
    return EmpiricalMeasure(np.vstack([mu.points, nu.points]), np.concatenate([mu.weights, -nu.weights]))


def save_measure(path: str | Path, mu: EmpiricalMeasure) -> None:
    """Columnar text: one point per row, weight column last."""
    header = " ".join([f"x{i + 1}" for i in range(mu.dim)] + ["weight"])
    np.savetxt(path, np.column_stack([mu.points, mu.weights]), header=header, fmt="%.17g")


def load_measure(path: str | Path) -> EmpiricalMeasure:
    data = np.loadtxt(path, ndmin=2)
    return EmpiricalMeasure(data[:, :-1], data[:, -1])


# --------------------------------------------------------------------------
# histograms and TV


def weighted_quantile(x: np.ndarray, w: np.ndarray, q) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    cw = np.cumsum(np.abs(w)[order])
    cw /= cw[-1]
    idx = np.searchsorted(cw, np.atleast_1d(q), side="left")
    return x[order][np.minimum(idx, x.size - 1)]


@dataclass(frozen=True)
class Binning:
    """Histogram policy for TV estimation.

    ``width`` is a scalar or one width per axis.  ``width=None`` selects the
    Freedman-Diaconis width of the pooled sample,
    generalised to k dimensions as 2 IQR n^{-1/(2+k)} (minimum over axes),
    capped so that at least ``min_bins`` cells span the pooled range.
    """

    width: float | tuple | None = None
    min_bins: int = 8
    refine: bool = True


def fd_width(points: np.ndarray, weights: np.ndarray, count: int, min_bins: int = 8) -> float:
    k = points.shape[1]
    widths = []
    for d in range(k):
        x = points[:, d]
        q25, q75 = weighted_quantile(x, weights, [0.25, 0.75])
        span = float(x.max() - x.min())
        w = 2.0 * (q75 - q25) * count ** (-1.0 / (2 + k))
        if span > 0:
            w = min(w, span / min_bins) if w > 0 else span / min_bins
        widths.append(w)
    positive = [w for w in widths if w > 0]
    return float(min(positive)) if positive else 1.0


def _flat_cells(points: np.ndarray, origin, width, shape) -> np.ndarray:
    idx = np.floor((points - np.asarray(origin, dtype=float)) / width).astype(np.int64)
    idx = np.clip(idx, 0, np.asarray(shape) - 1)
    return np.ravel_multi_index(tuple(idx.T), shape)


def histogram(mu: EmpiricalMeasure, origin, width, shape) -> GridDensity:
    shape = tuple(int(s) for s in shape)
    flat = _flat_cells(mu.points, origin, width, shape)
    masses = np.bincount(flat, weights=mu.weights, minlength=int(np.prod(shape))).reshape(shape)
    width = np.broadcast_to(np.asarray(width, dtype=float), (mu.dim,)).copy()
    return GridDensity(np.asarray(origin, dtype=float), width, masses)


def _tv_on_grid(mu, nu, origin, width, span) -> tuple[float, float]:
    """Histogram TV and its sampling-noise floor on one grid."""
    shape = tuple(int(s) for s in np.floor(span / width).astype(np.int64) + 1)
    cells = int(np.prod(np.asarray(shape, dtype=float)))
    if cells > _MAX_CELLS:
        raise SupportTooLarge(f"histogram grid of {cells} cells exceeds {_MAX_CELLS}")
    ia = _flat_cells(mu.points, origin, width, shape)
    ib = _flat_cells(nu.points, origin, width, shape)
    a = np.bincount(ia, weights=mu.weights, minlength=cells)
    b = np.bincount(ib, weights=nu.weights, minlength=cells)
    # E|noise| per cell for independent atoms: sqrt(2/pi) * sqrt(sum of w^2)
    s2 = np.bincount(ia, weights=mu.weights**2, minlength=cells) + np.bincount(ib, weights=nu.weights**2, minlength=cells)
    floor = np.sqrt(2.0 / np.pi) * np.sum(np.sqrt(s2))
    return float(np.sum(np.abs(a - b))), float(floor)


def tv_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure, binning: Binning = Binning()) -> DistanceReport:
    """Histogram estimate of ||mu - nu||_TV on a common grid.

    The report carries the value at bin width w and at w/2.  ``error`` is
    the drift between the two plus the sampling-noise floor at width w (the
    expected histogram TV of two independent samples of the same law); both
    are bias bounds, so they add.
    """
    if mu.size == 0 or nu.size == 0:
        raise EmptyMeasure("tv_distance of an empty measure")
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"measures live on R^{mu.dim} and R^{nu.dim}")
    pooled = np.vstack([mu.points, nu.points])
    pooled_w = np.concatenate([mu.weights, nu.weights])
    if binning.width is None:
        width = np.full(mu.dim, fd_width(pooled, pooled_w, pooled.shape[0], binning.min_bins))
    else:
        width = np.broadcast_to(np.asarray(binning.width, dtype=float), (mu.dim,)).copy()
    if np.any(width <= 0):
        raise ValueError("bin widths must be positive")
    origin = pooled.min(axis=0)
    span = pooled.max(axis=0) - origin
    value, floor = _tv_on_grid(mu, nu, origin, width, span)
    extra = {"noise_floor": floor, "widths": tuple(float(v) for v in width)}
    refined = err = None
    if binning.refine:
        refined, _ = _tv_on_grid(mu, nu, origin, width / 2, span)
        extra["drift"] = abs(refined - value)
        err = extra["drift"] + floor
    return DistanceReport(value, "histogram", float(np.min(width)), err, refined, extra)


# --------------------------------------------------------------------------
# KR and Kantorovich norms


def _merge_atoms(points: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(points, axis=0, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=weights, minlength=uniq.shape[0])
    keep = np.abs(w) > 1e-15 * max(1.0, np.sum(np.abs(weights)))
    return uniq[keep], w[keep]


def coarsen(omega: EmpiricalMeasure, max_support: int) -> tuple[EmpiricalMeasure, float]:
    """Snap atoms to grid-cell centres until at most max_support atoms remain.

    Returns the coarsened measure and the error bound cell diameter x total
    |mass| for any 1-Lipschitz test function.
    """
    if omega.dim == 1 and omega.size > max_support:
        return _coarsen_1d(omega, max_support)
    pts, w = _merge_atoms(omega.points, omega.weights)
    if pts.shape[0] <= max_support:
        return EmpiricalMeasure(pts, w), 0.0
    k = pts.shape[1]
    lo = pts.min(axis=0)
    span = float(np.max(pts.max(axis=0) - lo))
    width = span / max(1.0, max_support ** (1.0 / k) - 1.0)
    while True:
        idx = np.floor((pts - lo) / width).astype(np.int64)
        centers = lo + (idx + 0.5) * width
        cpts, cw = _merge_atoms(centers, w)
        if cpts.shape[0] <= max_support:
            break
        width *= 1.1
    bound = width * np.sqrt(k) * float(np.sum(np.abs(w)))
    return EmpiricalMeasure(cpts, cw), bound


def _coarsen_1d(omega: EmpiricalMeasure, max_support: int) -> tuple[EmpiricalMeasure, float]:
    """Bin a measure on R into max_support equal cells in one pass."""
    x = omega.points[:, 0]
    lo, hi = float(x.min()), float(x.max())
    width = (hi - lo) / max_support if hi > lo else 1.0
    idx = np.minimum(((x - lo) / width).astype(np.int64), max_support - 1)
    cw = np.bincount(idx, weights=omega.weights, minlength=max_support)
    keep = np.flatnonzero(np.abs(cw) > 1e-15 * max(1.0, omega.total_variation_mass))
    centers = lo + (keep + 0.5) * width
    return EmpiricalMeasure(centers, cw[keep]), width * omega.total_variation_mass


def _lipschitz_lp(pts: np.ndarray, w: np.ndarray, bounded: bool) -> float:
    m, k = pts.shape
    if m == 0:
        return 0.0
    if k == 1:
        order = np.argsort(pts[:, 0])
        pts, w = pts[order], w[order]
        i = np.arange(m - 1)
        j = i + 1
        d = np.diff(pts[:, 0])
    else:
        i, j = np.triu_indices(m, 1)
        d = np.linalg.norm(pts[i] - pts[j], axis=1)
    r = i.size
    rows = np.concatenate([np.arange(r), np.arange(r), r + np.arange(r), r + np.arange(r)])
    cols = np.concatenate([i, j, i, j])
    vals = np.concatenate([np.ones(r), -np.ones(r), -np.ones(r), np.ones(r)])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(2 * r, m)) if r else None
    b = np.concatenate([d, d]) if r else None
    if bounded:
        bounds = [(-1.0, 1.0)] * m
    else:
        # pin one potential: the objective is shift invariant for balanced mass
        bounds = [(0.0, 0.0)] + [(None, None)] * (m - 1)
    res = optimize.linprog(-w, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise LpInfeasible(f"LP solver status {res.status}: {res.message}")
    return float(-res.fun)


def _norm_lp(omega: EmpiricalMeasure, bounded: bool, max_support: int | None, allow_coarsen: bool) -> DistanceReport:
    if omega.size == 0:
        return DistanceReport(0.0, "lp", 0, 0.0)
    if max_support is None:
        max_support = DEFAULT_MAX_SUPPORT_1D if omega.dim == 1 else DEFAULT_MAX_SUPPORT
    if omega.dim == 1 and omega.size > 4 * max_support:
        # far too many atoms to merge exactly: bin straight away
        pts, w = omega.points, omega.weights
    else:
        pts, w = _merge_atoms(omega.points, omega.weights)
    coarse_err = 0.0
    if pts.shape[0] > max_support:
        if not allow_coarsen:
            raise SupportTooLarge(f"support of {pts.shape[0]} atoms exceeds limit {max_support}")
        cm, coarse_err = coarsen(EmpiricalMeasure(pts, w), max_support)
        pts, w = cm.points, cm.weights
    value = max(0.0, _lipschitz_lp(pts, w, bounded))
    return DistanceReport(value, "lp", pts.shape[0], coarse_err if coarse_err else 0.0,
                          extra={"coarsened": coarse_err > 0})


def kr_norm(omega: EmpiricalMeasure, max_support: int | None = None, allow_coarsen: bool = True) -> DistanceReport:
    """||omega||_KR: sup sum w_i phi_i over |phi_i| <= 1, |phi_i - phi_j| <= |x_i - x_j|."""
    return _norm_lp(omega, True, max_support, allow_coarsen)


def kantorovich_norm(omega: EmpiricalMeasure, max_support: int | None = None,
                     allow_coarsen: bool = True) -> DistanceReport:
    """||omega||_K for a balanced signed measure (Wasserstein-1 by duality)."""
    if abs(omega.total_mass) > 1e-10:
        raise MassNotBalanced(f"total mass {omega.total_mass:.3e} is not zero")
    return _norm_lp(omega, False, max_support, allow_coarsen)


def kantorovich_cdf_1d(omega: EmpiricalMeasure) -> float:
    """int |W(x)| dx with W the cumulative mass of a balanced measure on R.

    On the line the Kantorovich norm has this closed form, independent of
    the LP; used as an oracle.
    """
    if omega.dim != 1:
        raise DimensionMismatch("kantorovich_cdf_1d needs a measure on R")
    if abs(omega.total_mass) > 1e-10:
        raise MassNotBalanced(f"total mass {omega.total_mass:.3e} is not zero")
    order = np.argsort(omega.points[:, 0], kind="stable")
    x = omega.points[order, 0]
    W = np.cumsum(omega.weights[order])
    return float(np.sum(np.abs(W[:-1]) * np.diff(x)))


def primal_transport_cost(omega: EmpiricalMeasure, cap: float | None = None, scale: int = 10**9) -> float:
    """Min-cost transport of omega^+ onto omega^- by network simplex.

    Independent of the LP path: solves the primal problem with cost
    |x - y| (or min(|x - y|, cap)) on integer-scaled masses.  With cap=2 this
    equals the KR norm of a balanced measure, without cap the Kantorovich norm.
    """
    import networkx as nx

    pts, w = _merge_atoms(omega.points, omega.weights)
    pos = np.flatnonzero(w > 0)
    neg = np.flatnonzero(w < 0)
    if pos.size == 0 and neg.size == 0:
        return 0.0
    sup = np.rint(w[pos] * scale).astype(np.int64)
    dem = np.rint(-w[neg] * scale).astype(np.int64)
    gap = int(sup.sum() - dem.sum())
    if abs(gap) > max(2, pos.size + neg.size):
        raise MassNotBalanced(f"total mass {w.sum():.3e} is not zero")
    if gap > 0:
        dem[np.argmax(dem)] += gap
    elif gap < 0:
        sup[np.argmax(sup)] -= gap
    G = nx.DiGraph()
    for a, s in zip(pos, sup):
        G.add_node(("s", int(a)), demand=-int(s))
    for b, d in zip(neg, dem):
        G.add_node(("t", int(b)), demand=int(d))
    for a in pos:
        for b in neg:
            c = float(np.linalg.norm(pts[a] - pts[b]))
            if cap is not None:
                c = min(c, cap)
            G.add_edge(("s", int(a)), ("t", int(b)), weight=int(round(c * scale)))
    cost, _ = nx.network_simplex(G)
    return cost / float(scale) / float(scale)


# --------------------------------------------------------------------------
# oracle densities on R


@dataclass(frozen=True, eq=False)
class OracleDensity:
    name: str
    dist: object  # frozen scipy.stats distribution
    support: tuple[float, float]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        out = np.zeros_like(x)
        inside = (x > lo) & (x < hi)
        out[inside] = self.dist.pdf(x[inside])
        return out

    def cdf(self, x):
        return self.dist.cdf(x)

    def ppf(self, q):
        return self.dist.ppf(q)

    def sample(self, count: int, seed: int, stream_id: int = 0) -> np.ndarray:
        from .gaussian_space import rng

        return self.dist.ppf(rng(seed, stream_id).random(count))

    def cell_masses(self, edges: np.ndarray) -> np.ndarray:
        return np.diff(self.dist.cdf(edges))


DENSITIES = {
    "normal": OracleDensity("normal", stats.norm(), (-np.inf, np.inf)),
    "chi2_1": OracleDensity("chi2_1", stats.chi2(1), (0.0, np.inf)),
    "uniform": OracleDensity("uniform", stats.uniform(0.0, 1.0), (0.0, 1.0)),
}


def get_density(name: str) -> OracleDensity:
    try:
        return DENSITIES[name]
    except KeyError:
        raise UnknownDensity(f"unknown density {name!r}; known: {sorted(DENSITIES)}") from None


def _shift_tv_quad(rho: OracleDensity, h: float) -> float:
    lo, hi = rho.support

    def diff(x):
        return rho.pdf(np.asarray(x) + h) - rho.pdf(x)

    finite = [v for v in (lo, hi, lo - h, hi - h) if np.isfinite(v)]
    a = min(finite) if np.isfinite(lo) else min([-40.0] + finite)
    b = max(finite) if np.isfinite(hi) else max([40.0] + finite)
    breaks = sorted(set(finite) | {a, b})
    pieces = []
    for u, v in zip(breaks[:-1], breaks[1:]):
        if v <= u:
            continue
        grid = np.linspace(u, v, 2049)[1:-1]
        dv = diff(grid)
        # sign changes between consecutive nonzero grid values; exact zeros
        # on flat stretches contribute nothing to |diff|
        nz = np.flatnonzero(dv != 0.0)
        roots = []
        for i0, i1 in zip(nz[:-1], nz[1:]):
            if dv[i0] * dv[i1] < 0:
                roots.append(optimize.brentq(diff, grid[i0], grid[i1], xtol=1e-15, rtol=1e-15))
        pts = [u] + roots + [v]
        pieces.extend(zip(pts[:-1], pts[1:]))
    total = 0.0
    with warnings.catch_warnings():
        # the chi2 pole at 0 makes quad report unreachable relative tolerance
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for u, v in pieces:
            if v <= u:
                continue
            val, _ = integrate.quad(lambda x: abs(diff(x)), u, v, epsabs=1e-14, epsrel=1e-12, limit=400)
            total += val
    # tails beyond [a, b] for unbounded support carry < 1e-300 mass
    return total


def tv_shift_oracle_1d(density: str | OracleDensity, h: float) -> float:
    """Quadrature of int |rho(x + h) - rho(x)| dx for a catalog density."""
    rho = get_density(density) if isinstance(density, str) else density
    h = abs(float(h))
    if h == 0.0:
        return 0.0
    return float(min(2.0, _shift_tv_quad(rho, h)))


def tv_shift_closed_form(density: str, h: float) -> float:
    """Closed forms used as independent oracles for the quadrature path."""
    h = abs(float(h))
    if density == "normal":
        return float(4.0 * stats.norm.cdf(h / 2.0) - 2.0)
    if density == "chi2_1":
        # monotone density: the shift TV is twice the mass of [0, h]
        return float(2.0 * stats.chi2(1).cdf(h))
    if density == "uniform":
        return float(2.0 * min(h, 1.0))
    raise UnknownDensity(density)


def discretize(density: str | OracleDensity, cells: int = 4096, tail: float = 1e-9) -> EmpiricalMeasure:
    """Atoms at cell centres carrying the exact cell masses of a density."""
    rho = get_density(density) if isinstance(density, str) else density
    lo = rho.support[0] if np.isfinite(rho.support[0]) else float(rho.ppf(tail))
    hi = rho.support[1] if np.isfinite(rho.support[1]) else float(rho.ppf(1 - tail))
    edges = np.linspace(lo, hi, cells + 1)
    m = rho.cell_masses(edges)
    return EmpiricalMeasure(0.5 * (edges[:-1] + edges[1:]), m)
