"""Mappings f: R^n -> R^k with exact values, gradients and Hessians.

Two kinds of map exist.  Polynomial maps are stored as monomial lists and
differentiated in closed form.  Closure-backed maps are Python functions of
coordinate :class:`~gaussreg.jets.Jet` objects and are differentiated by
second-order forward mode.  Component indices are 0-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e

from . import jets as J
from .errors import ConfigParse, DimensionMismatch, NonFiniteValue, UnknownMap
from .gaussian_space import MCEstimate, SampleBatch, estimate
from .jets import Jet


@dataclass(frozen=True)
class Jet2:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class PolynomialMap:
    """components[i] is a tuple of (exponent tuple, coefficient) terms."""

    dim_in: int
    dim_out: int
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.dim_out:
            raise ConfigParse(f"expected {self.dim_out} components, got {len(self.components)}")
        canon = []
        for ci, terms in enumerate(self.components):
            seen = set()
            out = []
            for exps, coeff in terms:
                exps = tuple(int(e) for e in exps)
                if len(exps) != self.dim_in or any(e < 0 for e in exps):
                    raise ConfigParse(f"component {ci}: bad exponent vector {exps} for dim_in={self.dim_in}")
                if exps in seen:
                    raise ConfigParse(f"component {ci}: duplicate multi-index {exps}")
                seen.add(exps)
                out.append((exps, float(coeff)))
            canon.append(tuple(sorted(out)))
        object.__setattr__(self, "components", tuple(canon))

    @property
    def max_degree(self) -> int:
        return max((max(e) for terms in self.components for e, _ in terms), default=0)

    def to_dict(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "components": [[[list(e), c] for e, c in terms] for terms in self.components],
        }


@dataclass(frozen=True, eq=False)
class MapSpec:
    name: str
    dim_in: int
    dim_out: int
    poly: PolynomialMap | None = None
    closure: Callable[[list[Jet]], list[Jet]] | None = None
    description: str = ""
    facts: str = ""

    def __post_init__(self):
        if (self.poly is None) == (self.closure is None):
            raise ValueError("MapSpec needs exactly one of poly / closure")

    def __repr__(self):
        return f"MapSpec({self.name!r}, n={self.dim_in}, k={self.dim_out})"


@dataclass(frozen=True, eq=False)
class MapJets:
    value: np.ndarray  # (N, k)
    grad: np.ndarray  # (N, k, n)
    hess: np.ndarray  # (N, k, n, n)

    @property
    def count(self) -> int:
        return self.value.shape[0]


def _poly_jets(poly: PolynomialMap, X: np.ndarray) -> MapJets:
    N, n = X.shape
    k = poly.dim_out
    deg = poly.max_degree
    # powers[e, :, i] = x_i ** e
    powers = np.empty((deg + 1, N, n))
    powers[0] = 1.0
    for e in range(1, deg + 1):
        powers[e] = powers[e - 1] * X

    def pw(i, e):
        return powers[e, :, i] if e >= 0 else np.zeros(N)

    val = np.zeros((N, k))
    grad = np.zeros((N, k, n))
    hess = np.zeros((N, k, n, n))
    for c, terms in enumerate(poly.components):
        for exps, coeff in terms:
            if all(e == 0 for e in exps):
                val[:, c] += coeff
                continue
            factors = [pw(i, exps[i]) for i in range(n)]
            val[:, c] += coeff * np.prod(factors, axis=0)
            for i in range(n):
                ei = exps[i]
                if ei == 0:
                    continue
                rest_i = [factors[m] for m in range(n) if m != i]
                base_i = np.prod(rest_i, axis=0) if rest_i else np.ones(N)
                grad[:, c, i] += coeff * ei * pw(i, ei - 1) * base_i
                if ei >= 2:
                    hess[:, c, i, i] += coeff * ei * (ei - 1) * pw(i, ei - 2) * base_i
                for j in range(i + 1, n):
                    ej = exps[j]
                    if ej == 0:
                        continue
                    rest = [factors[m] for m in range(n) if m not in (i, j)]
                    base = np.prod(rest, axis=0) if rest else np.ones(N)
                    term = coeff * ei * ej * pw(i, ei - 1) * pw(j, ej - 1) * base
                    hess[:, c, i, j] += term
                    hess[:, c, j, i] += term
    return MapJets(val, grad, hess)


def _closure_jets(spec: MapSpec, X: np.ndarray) -> MapJets:
    comps = spec.closure(Jet.variables(X))
    if len(comps) != spec.dim_out:
        raise DimensionMismatch(f"{spec.name}: closure returned {len(comps)} components, expected {spec.dim_out}")
    N = X.shape[0]
    val = np.stack([np.broadcast_to(c.val, (N,)) for c in comps], axis=1)
    grad = np.stack([c.grad for c in comps], axis=1)
    hess = np.stack([c.hess for c in comps], axis=1)
    for arr in (val, grad, hess):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue(f"{spec.name}: non-finite jet")
    return MapJets(val, grad, hess)


def eval_jets(spec: MapSpec, X) -> MapJets:
    """Values, gradients and Hessians of all components at the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.dim_in:
        raise DimensionMismatch(f"{spec.name} expects points in R^{spec.dim_in}, got R^{X.shape[1]}")
    if spec.poly is not None:
        return _poly_jets(spec.poly, X)
    return _closure_jets(spec, X)


def eval_jet2(spec: MapSpec, component: int, x) -> Jet2:
    if not 0 <= component < spec.dim_out:
        raise IndexError(f"component {component} out of range for k={spec.dim_out}")
    mj = eval_jets(spec, np.asarray(x, dtype=float).reshape(1, -1))
    return Jet2(float(mj.value[0, component]), mj.grad[0, component].copy(), mj.hess[0, component].copy())


def evaluate(spec: MapSpec, X) -> np.ndarray:
    """Values only, shape (N, k)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.poly is None:
        return eval_jets(spec, X).value
    if X.shape[1] != spec.dim_in:
        raise DimensionMismatch(f"{spec.name} expects points in R^{spec.dim_in}, got R^{X.shape[1]}")
    N = X.shape[0]
    out = np.zeros((N, spec.dim_out))
    for c, terms in enumerate(spec.poly.components):
        for exps, coeff in terms:
            t = np.full(N, coeff)
            for i, e in enumerate(exps):
                if e:
                    t = t * X[:, i] ** e
            out[:, c] += t
    return out


def ou_values(mj: MapJets, X) -> np.ndarray:
    """L f_c = trace(D^2 f_c) - <x, grad f_c>, shape (N, k)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lap = np.trace(mj.hess, axis1=2, axis2=3)
    return lap - np.einsum("nki,ni->nk", mj.grad, X)


def ornstein_uhlenbeck(spec: MapSpec, component: int, x) -> float:
    j = eval_jet2(spec, component, x)
    return float(np.trace(j.hessian) - np.dot(np.asarray(x, dtype=float).ravel(), j.gradient))


@dataclass(frozen=True)
class SobolevNorm:
    p: float
    m: int
    components: tuple  # MCEstimate per component
    max: MCEstimate
    argmax: int


def _sobolev_terms(mj: MapJets, c: int, m: int) -> list[np.ndarray]:
    terms = [np.abs(mj.value[:, c]), np.linalg.norm(mj.grad[:, c], axis=1)]
    if m == 2:
        terms.append(np.sqrt(np.sum(mj.hess[:, c] ** 2, axis=(1, 2))))
    return terms


def _sum_of_lp_norms(terms: Sequence[np.ndarray], p: float) -> MCEstimate:
    # Joint delta method: total = sum_j (E a_j^p)^{1/p}.
    N = terms[0].shape[0]
    total = 0.0
    lin = np.zeros(N)
    for a in terms:
        ap = a**p
        mean = float(np.mean(ap))
        if mean == 0.0:
            continue
        total += mean ** (1.0 / p)
        lin += (mean ** (1.0 / p - 1.0) / p) * ap
    if not np.isfinite(total):
        raise NonFiniteValue("Sobolev norm diverged")
    se = float(estimate(lin).stderr) if total > 0 else 0.0
    return MCEstimate(float(total), se, N)


def sobolev_norm(spec: MapSpec, p: float, m: int, batch: SampleBatch) -> SobolevNorm:
    """MC estimate of ||f_i||_p + || |grad f_i| ||_p (+ || |D^2 f_i|_HS ||_p)."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    mj = eval_jets(spec, batch.points)
    comps = tuple(_sum_of_lp_norms(_sobolev_terms(mj, c, m), p) for c in range(spec.dim_out))
    i = int(np.argmax([e.mean for e in comps]))
    return SobolevNorm(p, m, comps, comps[i], i)


# --------------------------------------------------------------------------
# constructors and catalog


def polynomial(name: str, dim_in: int, components, description: str = "", facts: str = "") -> MapSpec:
    poly = PolynomialMap(dim_in, len(components), tuple(tuple((tuple(e), c) for e, c in comp) for comp in components))
    return MapSpec(name, dim_in, poly.dim_out, poly=poly, description=description, facts=facts)


def linear_map(name: str, A, b=None, **kw) -> MapSpec:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k, n = A.shape
    b = np.zeros(k) if b is None else np.asarray(b, dtype=float)
    comps = []
    for r in range(k):
        terms = [(tuple(int(i == j) for j in range(n)), A[r, i]) for i in range(n) if A[r, i] != 0]
        if b[r] != 0:
            terms.append(((0,) * n, b[r]))
        comps.append(terms)
    return polynomial(name, n, comps, **kw)


def quadratic_form(name: str, Q, **kw) -> MapSpec:
    """x -> <Qx, x> as a single-component polynomial."""
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    terms = {}
    for i in range(n):
        for j in range(n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + Q[i, j]
    return polynomial(name, n, [[(e, c) for e, c in terms.items() if c != 0]], **kw)


def hermite_map(degree: int, dim_in: int = 1, coord: int = 0) -> MapSpec:
    """Probabilists' Hermite polynomial He_m(x_coord); L He_m = -m He_m."""
    coeffs = hermite_e.herme2poly([0] * degree + [1])
    terms = []
    for d, c in enumerate(coeffs):
        if c != 0:
            e = [0] * dim_in
            e[coord] = d
            terms.append((tuple(e), float(c)))
    name = f"he{degree}" if dim_in == 1 else f"he{degree}_x{coord + 1}_n{dim_in}"
    return polynomial(name, dim_in, [terms], description=f"Hermite He_{degree}(x{coord + 1})",
                      facts=f"eigenfunction of L with eigenvalue -{degree}")


def closure_map(name: str, dim_in: int, dim_out: int, fn, **kw) -> MapSpec:
    return MapSpec(name, dim_in, dim_out, closure=fn, **kw)


def sin_linear(name: str, a, b: float = 0.0, **kw) -> MapSpec:
    a = [float(v) for v in a]
    return closure_map(name, len(a), 1, lambda xs: [J.sin(J.dot(a, xs) + b)], **kw)


def x1_plus_sin_x2(n: float) -> MapSpec:
    """f_n(x) = x1 + sin(x2)/n on R^2 (k=1)."""
    return closure_map(f"x1_plus_sin_x2_over_{n:g}", 2, 1, lambda xs: [xs[0] + J.sin(xs[1]) * (1.0 / n)],
                       description="x1 + sin(x2)/n", facts="|grad f_n| >= 1")


def x1_plus_sin_x2_pair(n: float) -> MapSpec:
    """f_n(x) = (x1 + sin(x2)/n, x2) on R^2 (k=2)."""
    return closure_map(f"x1_plus_sin_x2_over_{n:g}_x2", 2, 2, lambda xs: [xs[0] + J.sin(xs[1]) * (1.0 / n), xs[1]],
                       description="(x1 + sin(x2)/n, x2)", facts="Delta_f = 1")


def scaled_x1(n: float) -> MapSpec:
    return linear_map(f"x1_over_{n:g}", [[1.0 / n]], description="x1/n", facts="|grad f| = 1/n")


def scaled_x1_pair(n: float) -> MapSpec:
    return linear_map(f"x1_over_{n:g}_x2", [[1.0 / n, 0.0], [0.0, 1.0]], description="(x1/n, x2)",
                      facts="Delta_f = 1/n^2")


def affine_variant(spec: MapSpec, scale: float = 1.0, offset=0.0, name: str | None = None) -> MapSpec:
    """x -> scale * f(x) + offset, keeping polynomial maps polynomial."""
    off = np.broadcast_to(np.asarray(offset, dtype=float), (spec.dim_out,))
    name = name or f"{spec.name}_affine_{scale:g}_{'_'.join(f'{v:g}' for v in off)}"
    desc = f"{scale:g} ({spec.description or spec.name}) + {tuple(float(v) for v in off)}"
    if spec.poly is not None:
        comps = []
        zero = (0,) * spec.dim_in
        for ci, terms in enumerate(spec.poly.components):
            d = {e: c * scale for e, c in terms}
            if off[ci] != 0:
                d[zero] = d.get(zero, 0.0) + float(off[ci])
            comps.append([(e, c) for e, c in d.items() if c != 0])
        return polynomial(name, spec.dim_in, comps, description=desc)
    inner = spec.closure
    return closure_map(name, spec.dim_in, spec.dim_out,
                       lambda xs: [c * scale + float(o) for c, o in zip(inner(xs), off)], description=desc)


def _build_catalog() -> dict[str, MapSpec]:
    cat: dict[str, MapSpec] = {}

    def add(m: MapSpec):
        cat[m.name] = m

    add(linear_map("x1", [[1.0]], description="coordinate x1", facts="pushforward N(0,1)"))
    add(linear_map("x1_shift_1", [[1.0]], [1.0], description="x1 + 1", facts="pushforward N(1,1)"))
    add(linear_map("x1_n2", [[1.0, 0.0]], description="coordinate projection x1 on R^2", facts="pushforward N(0,1)"))
    add(linear_map("x2_n2", [[0.0, 1.0]], description="coordinate projection x2 on R^2", facts="pushforward N(0,1)"))
    add(linear_map("lin_3_4", [[0.6, 0.8]], description="0.6 x1 + 0.8 x2", facts="pushforward N(0,1)"))
    add(linear_map("x1_x2", [[1.0, 0.0], [0.0, 1.0]], description="identity on R^2",
                   facts="pushforward N(0,I2); Delta_f = 1"))
    add(linear_map("sum_diff", [[1.0, 1.0], [1.0, -1.0]], description="(x1+x2, x1-x2)",
                   facts="M_f = 2I; Delta_f = 4"))
    add(linear_map("x1_x1", [[1.0, 0.0], [1.0, 0.0]], description="(x1, x1) on R^2",
                   facts="Delta_f = 0 (degenerate)"))
    add(linear_map("x1_x1_n1", [[1.0], [1.0]], description="(x1, x1) on R^1, k > n", facts="Delta_f = 0 (k > n)"))
    add(linear_map("const_1", [[0.0]], [1.0], description="constant 1", facts="pushforward delta_1"))
    add(linear_map("const_1_n2", [[0.0, 0.0]], [1.0], description="constant 1 on R^2", facts="pushforward delta_1"))
    add(polynomial("x1sq", 1, [[((2,), 1.0)]], description="x1^2", facts="pushforward chi2_1; |grad f| = 2|x1|"))
    add(polynomial("x1sq_n2", 2, [[((2, 0), 1.0)]], description="x1^2 on R^2", facts="pushforward chi2_1"))
    add(polynomial("x1x2", 2, [[((1, 1), 1.0)]], description="x1 x2", facts="product of independent normals"))
    add(polynomial("x1sq_x2", 2, [[((2, 0), 1.0)], [((0, 1), 1.0)]], description="(x1^2, x2)",
                   facts="Δ_f = 4x₁²; pushforward chi2_1 x N(0,1)"))
    add(polynomial("x1_plus_half_x1sq", 1, [[((1,), 1.0), ((2,), 0.5)]], description="x1 + x1^2/2",
                   facts="|grad f| = |1 + x1| vanishes at x1 = -1"))
    add(quadratic_form("quad_diag_1_2", np.diag([1.0, 2.0]), description="x1^2 + 2 x2^2",
                       facts="quadratic form <Qx,x>"))
    add(quadratic_form("quad_offdiag", [[1.0, 0.5], [0.5, -1.0]], description="x1^2 + x1x2 - x2^2",
                       facts="indefinite quadratic form"))
    for d in range(1, 6):
        add(hermite_map(d))
    add(sin_linear("sin_x1", [1.0], description="sin(x1)", facts="bounded, non-polynomial"))
    add(sin_linear("sin_x1_n2", [1.0, 0.0], description="sin(x1) on R^2", facts="bounded, non-polynomial"))
    add(sin_linear("sin_lin_n2", [0.8, -0.6], 0.3, description="sin(0.8x1 - 0.6x2 + 0.3)",
                   facts="bounded, non-polynomial"))
    add(closure_map("sin_pair", 2, 2, lambda xs: [J.sin(xs[0] + 0.5 * xs[1]), J.sin(xs[1] - 0.3 * xs[0]) + 0.2 * xs[0]],
                    description="component-wise sin of linear forms (+ 0.2 x1)", facts="smooth bounded-derivative map"))
    add(closure_map("x1_plus_sin_x2", 2, 1, lambda xs: [xs[0] + J.sin(xs[1])], description="x1 + sin(x2)",
                    facts="|grad f| >= 1"))
    add(closure_map("exp_mix", 2, 2, lambda xs: [J.exp(0.3 * xs[0]) + xs[1], xs[0] * J.cos(xs[1])],
                    description="(exp(0.3 x1) + x2, x1 cos x2)", facts="non-polynomial, unbounded"))
    add(closure_map("tanh_x1", 1, 1, lambda xs: [J.tanh(xs[0])], description="tanh(x1)",
                    facts="bounded, non-polynomial"))
    add(polynomial("cubic3", 3, [[((1, 0, 0), 1.0), ((0, 2, 1), 0.5)], [((0, 1, 0), 1.0), ((1, 0, 1), -0.3)],
                                 [((0, 0, 1), 1.0), ((3, 0, 0), 0.1)]],
                   description="cubic map R^3 -> R^3", facts="k = 3 Malliavin algebra"))
    return cat


CATALOG: dict[str, MapSpec] = _build_catalog()


def get_map(name: str) -> MapSpec:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownMap(f"unknown map {name!r}; see `gaussreg list-catalog`") from None


# --------------------------------------------------------------------------
# test functions phi: R^k -> R for the chain identity


@dataclass(frozen=True, eq=False)
class ScalarFunction:
    name: str
    dim: int
    fn: Callable[[list[Jet]], Jet] = field(repr=False)


    def jets_at(self, Y) -> Jet:
        return self.fn(Jet.variables(np.atleast_2d(Y)))


SCALAR_FUNCTIONS = {
    "product": lambda k: ScalarFunction("product", k, lambda ys: _prod(ys)),
    "sum": lambda k: ScalarFunction("sum", k, lambda ys: _sum(ys)),
    "constant": lambda k: ScalarFunction("constant", k, lambda ys: Jet.constant(2.5, ys[0])),
    "sin_cos": lambda k: ScalarFunction("sin_cos", k, lambda ys: J.sin(ys[0]) * J.cos(_sum(ys[1:]) if k > 1 else ys[0])),
    "quadratic": lambda k: ScalarFunction("quadratic", k, lambda ys: _sum([y * y * (i + 1.0) for i, y in enumerate(ys)])),
}


def _prod(ys):
    out = ys[0]
    for y in ys[1:]:
        out = out * y
    return out


def _sum(ys):
    out = ys[0]
    for y in ys[1:]:
        out = out + y
    return out


def scalar_function(name: str, k: int) -> ScalarFunction:
    try:
        return SCALAR_FUNCTIONS[name](k)
    except KeyError:
        raise UnknownMap(f"unknown scalar function {name!r}") from None




def compose(phi: ScalarFunction, spec: MapSpec, X) -> Jet:
    """Jet of phi o f at the rows of X, through forward-mode composition."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.poly is not None:
        mj = _poly_jets(spec.poly, X)
        comps = [Jet(mj.value[:, c].copy(), mj.grad[:, c].copy(), mj.hess[:, c].copy()) for c in range(spec.dim_out)]
    else:
        comps = spec.closure(Jet.variables(X))
    return phi.fn(comps)


# --------------------------------------------------------------------------
# config files


def map_from_dict(d: dict) -> MapSpec:
    if "builtin" in d:
        return get_map(str(d["builtin"]))
    try:
        dim_in = int(d["dim_in"])
        dim_out = int(d["dim_out"])
        comps = d["components"]
    except KeyError as exc:
        raise ConfigParse(f"map config missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"map config: {exc}") from None
    if not isinstance(comps, list) or len(comps) != dim_out:
        raise ConfigParse(f"field 'components' must list {dim_out} components")
    parsed = []
    for ci, comp in enumerate(comps):
        terms = []
        for t in comp:
            if not (isinstance(t, list) and len(t) == 2 and isinstance(t[0], list)):
                raise ConfigParse(f"field 'components[{ci}]': each term must be [[e1,...,en], coeff]")
            terms.append((tuple(t[0]), float(t[1])))
        parsed.append(terms)
    poly = PolynomialMap(dim_in, dim_out, tuple(tuple(c) for c in parsed))
    return MapSpec(str(d.get("name", "custom")), dim_in, dim_out, poly=poly,
                   description=str(d.get("description", "polynomial from config")))


def load_map(path: str | Path) -> MapSpec:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{path}: {exc}") from None
    return map_from_dict(d)


def map_to_dict(spec: MapSpec) -> dict:
    if spec.poly is None:
        return {"builtin": spec.name}
    return {"name": spec.name, **spec.poly.to_dict()}


def resolve_map(ref: str) -> MapSpec:
    """A catalog name, or a path to a JSON map config."""
    if ref in CATALOG:
        return CATALOG[ref]
    p = Path(ref)
    if p.suffix == ".json" and p.exists():
        return load_map(p)
    raise UnknownMap(f"map {ref!r} is neither a catalog name nor a readable .json config")
