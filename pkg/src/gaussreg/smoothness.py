"""The small-ball functional u_gamma, the shift modulus sigma, and Besov fits.

u_gamma(g, eps) = int_0^inf (s+1)^{-2} gamma(g <= eps s) ds.  By Fubini the
inner integral over s of the indicator is (1 + g/eps)^{-1}, so
u_gamma(g, eps) = E[eps / (eps + g)]; that closed form is the primary
estimator.  The definitional form (empirical CDF integrated over s) is kept
as a cross-check.

sigma(mu, t) is the sup of int d_e phi dmu over |phi| <= t, |d_e phi| <= 1.
In one dimension it is a linear program over piecewise-linear phi on a grid;
restricting phi to functions of <x, e> gives a lower bound in any dimension.
The upper bound comes from the shift-TV inequality with constant 6k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import optimize, stats

from .errors import DegenerateFit, EmptyMeasure, LpInfeasible, MomentDiverged, NonFiniteValue
from .gaussian_space import MCEstimate, estimate, rng
from .measures import (Binning, EmpiricalMeasure, OracleDensity, fd_width, get_density, shift, tv_distance,
                       tv_shift_oracle_1d)


@dataclass(frozen=True)
class UGammaEstimate:
    epsilon: float
    estimate: MCEstimate
    method: str = "closed-form"
    quadrature_error: float = 0.0

    @property
    def mean(self) -> float:
        return self.estimate.mean

    @property
    def error(self) -> float:
        """Standard error combined with the quadrature discretisation bound."""
        return float(np.hypot(self.estimate.stderr, self.quadrature_error))


def _check_g(g_values) -> np.ndarray:
    g = np.asarray(g_values, dtype=float).ravel()
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("g has non-finite values")
    if np.any(g < 0):
        raise ValueError("g must be nonnegative")
    return g


def u_gamma(g_values, epsilon: float) -> UGammaEstimate:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    g = _check_g(g_values)
    return UGammaEstimate(float(epsilon), estimate(epsilon / (epsilon + g)))


def u_gamma_quadrature_values(g_values, epsilon: float, nodes: int = 1 << 16) -> np.ndarray:
    """Per-sample midpoint-rule values of int_0^1 1{g <= eps tau / (1 - tau)} d tau."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    g = _check_g(g_values)
    tau = (np.arange(nodes) + 0.5) / nodes
    thresholds = epsilon * tau / (1.0 - tau)  # increasing in tau
    return (nodes - np.searchsorted(thresholds, g, side="left")) / nodes


def u_gamma_quadrature(g_values, epsilon: float, nodes: int = 1 << 16) -> UGammaEstimate:
    """u_gamma from its definition: the empirical CDF of g integrated in s.

    With s = tau / (1 - tau) the weight (s+1)^{-2} ds becomes d tau on (0, 1);
    the tau-integral uses the midpoint rule, whose error on each sample's
    indicator is at most 1/(2 nodes).
    """
    est = estimate(u_gamma_quadrature_values(g_values, epsilon, nodes))
    return UGammaEstimate(float(epsilon), est, "quadrature", 0.5 / nodes)


def lemma_1_1_margin(g_values, r: float, epsilon: float) -> tuple[MCEstimate, float]:
    """int (g + eps)^{-r} dgamma against r eps^{-r} u_gamma(g, eps)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    g = _check_g(g_values)
    lhs = estimate((g + epsilon) ** (-r))
    rhs = r * epsilon ** (-r) * u_gamma(g, epsilon).mean
    return lhs, float(rhs)


@dataclass(frozen=True)
class Probability:
    p: float
    lower: float
    upper: float
    count: int


def small_ball(g_values, epsilon: float, z: float = 1.96) -> Probability:
    """Empirical gamma(g <= eps) with a Wilson score interval."""
    g = np.asarray(g_values, dtype=float).ravel()
    n = g.size
    p = float(np.count_nonzero(g <= epsilon)) / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return Probability(p, float(max(0.0, centre - half)), float(min(1.0, centre + half)), n)


@dataclass(frozen=True)
class MomentEstimate:
    theta: float
    estimate: MCEstimate
    doubling: tuple  # means on nested prefixes N/8, N/4, N/2, N
    tail_index: float
    tail_index_se: float


def negative_moment(g_values, theta: float, tail_fraction: float = 0.01) -> MomentEstimate:
    """MC estimate of int g^{-theta} dgamma, refusing when the mean is infinite.

    The Hill estimator of the tail index of g^{-theta} over the top
    ``tail_fraction`` of samples decides divergence: the moment is reported
    only if the index is above 1 by three standard errors.
    """
    g = _check_g(g_values)
    with np.errstate(divide="ignore"):
        y = g ** (-float(theta))
    n = y.size
    if not np.all(np.isfinite(y)):
        raise MomentDiverged(f"g vanishes at {np.count_nonzero(~np.isfinite(y))} sample points")
    doubling = tuple(float(np.mean(y[: max(1, n >> s)])) for s in (3, 2, 1, 0))
    kk = max(10, int(n * tail_fraction))
    top = np.sort(y)[-(kk + 1):]
    logs = np.log(top[1:]) - np.log(top[0])
    mean_log = float(np.mean(logs))
    index = np.inf if mean_log <= 0 else 1.0 / mean_log
    index_se = index / np.sqrt(kk) if np.isfinite(index) else 0.0
    if index - 3.0 * index_se <= 1.0:
        raise MomentDiverged(
            f"tail index of g^(-{theta}) is {index:.3f} +- {index_se:.3f}; the moment is not finite "
            f"(prefix means {', '.join(f'{d:.4g}' for d in doubling)})")
    return MomentEstimate(float(theta), estimate(y), doubling, float(index), float(index_se))


# --------------------------------------------------------------------------
# sigma


@dataclass(frozen=True)
class SigmaEstimate:
    t: float
    lower: float
    upper: float
    direction_count: int
    cells: int
    history: tuple = field(default=(), compare=False)


def direction_set(k: int, random_count: int = 16, seed: int = 20240601) -> np.ndarray:
    """The 2k signed coordinate directions plus random unit vectors (fixed seed)."""
    eye = np.eye(k)
    dirs = [eye[i] * s for i in range(k) for s in (1.0, -1.0)]
    if k > 1 and random_count:
        v = rng(seed, 7).standard_normal((random_count, k))
        dirs.extend(v / np.linalg.norm(v, axis=1, keepdims=True))
    return np.array(dirs)


def sigma_lp(masses: np.ndarray, edges: np.ndarray, t: float) -> float:
    """max sum_c masses_c * slope_c over piecewise-linear phi on ``edges``.

    phi is linear on each cell with |slope| <= 1, |phi| <= t at the nodes and
    constant outside the grid.  Variables are the node values of phi.
    """
    masses = np.asarray(masses, dtype=float)
    edges = np.asarray(edges, dtype=float)
    G = masses.size
    widths = np.diff(edges)
    dens = masses / widths
    c = np.zeros(G + 1)
    c[1:] += dens
    c[:-1] -= dens
    i = np.arange(G)
    rows = np.concatenate([i, i, G + i, G + i])
    cols = np.concatenate([i + 1, i, i + 1, i])
    vals = np.concatenate([np.ones(G), -np.ones(G), -np.ones(G), np.ones(G)])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(2 * G, G + 1))
    b = np.concatenate([widths, widths])
    res = optimize.linprog(-c, A_ub=A, b_ub=b, bounds=[(-t, t)] * (G + 1), method="highs")
    if res.status != 0:
        raise LpInfeasible(f"sigma LP status {res.status}: {res.message}")
    return max(0.0, float(-res.fun))


def _grid_1d(values: np.ndarray, weights: np.ndarray, cells: int, q: float = 1e-3) -> np.ndarray:
    from .measures import weighted_quantile

    lo, hi = weighted_quantile(values, weights, [q, 1.0 - q])
    if hi <= lo:
        lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        lo, hi = lo - 0.5, lo + 0.5
    return np.linspace(lo, hi, cells + 1)


def _masses_1d(values: np.ndarray, weights: np.ndarray, edges: np.ndarray) -> np.ndarray:
    G = edges.size - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    inside = (idx >= 0) & (idx < G)
    return np.bincount(idx[inside], weights=weights[inside], minlength=G)


def sample_cells(size: int, max_cells: int = 512) -> int:
    """Grid size for sigma on an empirical measure: about size^{1/3} cells.

    The LP value is a supremum, so noise in the cell masses biases it upward
    and the bias grows with the number of cells; size^{1/3} balances that
    against discretisation.
    """
    return int(np.clip(round(size ** (1.0 / 3.0)), 16, max_cells))


def sigma_lower(mu: EmpiricalMeasure, t: float, directions=None, cells: int | None = None) -> float:
    """Lower bound for sigma(mu, t) from direction-cylindrical test functions."""
    if mu.size == 0:
        raise EmptyMeasure("sigma_lower of an empty measure")
    cells = cells or sample_cells(mu.size)
    dirs = direction_set(mu.dim) if directions is None else np.atleast_2d(directions)
    best = 0.0
    for e in dirs:
        y = mu.project(e)
        edges = _grid_1d(y, mu.weights, cells)
        best = max(best, sigma_lp(_masses_1d(y, mu.weights, edges), edges, t))
    return best


def _oracle_edges(rho: OracleDensity, cells: int, q: float) -> np.ndarray:
    lo = rho.support[0] if np.isfinite(rho.support[0]) else float(rho.ppf(q))
    hi = rho.support[1] if np.isfinite(rho.support[1]) else float(rho.ppf(1.0 - q))
    return np.linspace(lo, hi, cells + 1)


def sigma_lower_density(density: str | OracleDensity, t: float, cells: int = 512, q: float = 1e-6) -> float:
    """sigma_lp on the exact cell masses of a 1-D oracle density.

    The grid runs between finite support endpoints, or the q / 1-q quantiles
    on unbounded sides.
    """
    rho = get_density(density) if isinstance(density, str) else density
    edges = _oracle_edges(rho, cells, q)
    return sigma_lp(rho.cell_masses(edges), edges, t)


def sigma_lower_converged(source, t: float, cells: int = 512, rtol: float = 0.01, max_cells: int = 1 << 16,
                          min_doublings: int = 1) -> SigmaEstimate:
    """Refine the 1-D sigma grid by factors of 2 until successive values agree within rtol.

    ``source`` is a density name / OracleDensity, or a 1-D (possibly signed)
    EmpiricalMeasure.  Raises DegenerateFit if max_cells is reached first.
    """
    if isinstance(source, (str, OracleDensity)):
        def run(G):
            return sigma_lower_density(source, t, G)
    else:
        if source.dim != 1:
            raise ValueError("sigma_lower_converged needs a 1-D measure")
        y = source.points[:, 0]

        def run(G):
            edges = _grid_1d(y, source.weights, G)
            return sigma_lp(_masses_1d(y, source.weights, edges), edges, t)

    history = [run(cells)]
    G = cells
    while True:
        G *= 2
        if G > max_cells:
            raise DegenerateFit(f"sigma at t={t} not converged within {max_cells} cells: {history}")
        history.append(run(G))
        prev, cur = history[-2], history[-1]
        if len(history) > min_doublings and abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            break
    return SigmaEstimate(float(t), history[-1], np.nan, 1, G, tuple(history))


def shift_binning(h, base_width: float, coarsen: float = 4.0, transverse: float = 8.0) -> Binning:
    """Histogram policy for ||mu_h - mu||_TV.

    Along a coordinate shift the cells have width |h| / m, with m the
    smallest integer making |h| / m <= coarsen x base_width: the shift then
    moves atoms by whole cells (no aliasing between h and the grid) while the
    cells stay coarse enough to keep the noise floor low.  Transverse axes
    get transverse x base_width; coarsening across the shift can only lower
    the TV and is exact for product laws.  Oblique shifts use isotropic
    cells of coarsen x base_width.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    nz = np.flatnonzero(h != 0)
    if nz.size != 1:
        return Binning(width=coarsen * base_width)
    a = abs(float(h[nz[0]]))
    m = max(1, int(np.ceil(a / (coarsen * base_width))))
    widths = np.full(h.size, transverse * base_width)
    widths[nz[0]] = a / m
    return Binning(width=tuple(widths))


def base_width(mu: EmpiricalMeasure) -> float:
    """Freedman-Diaconis width of the pooled pair (mu, mu_h)."""
    return fd_width(mu.points, mu.weights, 2 * mu.size)


def shift_tv(mu: EmpiricalMeasure, h, binning: Binning | None = None, width: float | None = None):
    """Histogram ||mu_h - mu||_TV with the shift-aligned grid by default."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if binning is None:
        binning = shift_binning(h, width or base_width(mu))
    return tv_distance(shift(mu, h), mu, binning)


def sup_shift_tv(source, t: float, directions=None, radii=(1.0, 0.5, 0.25), binning: Binning | None = None) -> float:
    """max over h = r t e of ||mu_h - mu||_TV (quadrature for oracle densities)."""
    if isinstance(source, (str, OracleDensity)):
        return max(tv_shift_oracle_1d(source, r * t) for r in radii)
    dirs = direction_set(source.dim) if directions is None else np.atleast_2d(directions)
    w = base_width(source)
    best = 0.0
    for e in dirs:
        for r in radii:
            best = max(best, shift_tv(source, r * t * e, binning, w).value)
    return best


def sigma_upper(source, t: float, directions=None, radii=(1.0, 0.5, 0.25), binning: Binning | None = None) -> float:
    """6k sup_{|h| <= t} ||mu_h - mu||_TV over the sampled shifts."""
    k = 1 if isinstance(source, (str, OracleDensity)) else source.dim
    return 6.0 * k * sup_shift_tv(source, t, directions, radii, binning)


def sigma_estimate(mu: EmpiricalMeasure, t: float, directions=None, cells: int | None = None) -> SigmaEstimate:
    dirs = direction_set(mu.dim) if directions is None else np.atleast_2d(directions)
    lo = sigma_lower(mu, t, dirs, cells)
    # shift TV is symmetric in h -> -h, so half the signed directions suffice
    hi = sigma_upper(mu, t, _half_directions(dirs))
    return SigmaEstimate(float(t), lo, hi, len(dirs), cells or sample_cells(mu.size))


def _half_directions(dirs: np.ndarray) -> np.ndarray:
    keep = []
    for d in dirs:
        if not any(np.allclose(d, -e) for e in keep):
            keep.append(d)
    return np.array(keep)


# --------------------------------------------------------------------------
# Besov exponent fits


@dataclass(frozen=True)
class BesovFit:
    h_values: tuple
    tv_values: tuple
    alpha_hat: float
    log_C_hat: float
    r_squared: float
    errors: tuple = ()
    used: tuple = ()
    method: str = "quadrature"


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares slope, intercept and r^2 of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    res = stats.linregress(lx, ly)
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def geometric_grid(lo: float, hi: float, per_decade: int = 8) -> np.ndarray:
    n = max(2, int(round(np.log10(hi / lo) * per_decade)) + 1)
    return np.geomspace(lo, hi, n)


def besov_fit(source, h_grid, direction=None, binning: Binning | None = None, snr: float = 5.0,
              min_decades: float = 1.5) -> BesovFit:
    """Fit ||mu_h - mu||_TV ~ C |h|^alpha on a grid of shift lengths.

    ``source`` is an oracle density (quadrature TV) or an EmpiricalMeasure
    (histogram TV along ``direction``, shift-aligned grid unless ``binning``
    is given).  Only h with TV >= snr x its
    resolution error enter the fit.
    """
    h = np.sort(np.asarray(h_grid, dtype=float))
    if np.any(h <= 0):
        raise ValueError("h values must be positive")
    if np.log10(h[-1] / h[0]) < min_decades - 1e-9:
        raise ValueError(f"h grid spans {np.log10(h[-1] / h[0]):.2f} decades, need {min_decades}")
    if isinstance(source, (str, OracleDensity)):
        tv = np.array([tv_shift_oracle_1d(source, v) for v in h])
        err = np.full(h.size, 1e-9)
        method = "quadrature"
    else:
        e = np.zeros(source.dim)
        e[0] = 1.0
        if direction is not None:
            e = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
        w = base_width(source)
        reps = [shift_tv(source, v * e, binning, w) for v in h]
        tv = np.array([r.value for r in reps])
        err = np.array([r.error if r.error is not None else 0.0 for r in reps])
        method = "histogram"
    used = (tv > 0) & (tv >= snr * err)
    if np.count_nonzero(used) < 4:
        raise DegenerateFit(f"only {np.count_nonzero(used)} usable h values (need 4)")
    slope, icpt, r2 = loglog_fit(h[used], tv[used])
    if not np.isfinite(slope):
        raise DegenerateFit("non-finite slope")
    return BesovFit(tuple(h), tuple(tv), slope, icpt, r2, tuple(err), tuple(bool(u) for u in used), method)


def besov_alpha(p: float, theta: float, k: int = 1) -> float:
    """Besov order from p-integrability of f and theta-moments of the degeneracy.

    k = 1: p theta / (2p + theta); k >= 2: p theta / (2p + (4k-1) theta).
    The one-dimensional order is sharper than the k = 1 case of the
    general formula.
    """
    if k == 1:
        return p * theta / (2.0 * p + theta)
    return p * theta / (2.0 * p + (4 * k - 1) * theta)


def tv_kr_exponent(p: float, theta: float, k: int = 1) -> float:
    """Exponent of KR in the TV-vs-KR bound: alpha / (1 + alpha).

    For k = 1 this equals p theta / ((2 + theta) p + theta).
    """
    a = besov_alpha(p, theta, k)
    return a / (1.0 + a)
