"""Pointwise Malliavin-matrix algebra for f: R^n -> R^k.

M_f = (<grad f_i, grad f_j>), Delta_f = det M_f, A_f = adj(M_f), and
grad Delta_f from Jacobi's formula d_l det M = tr(A d_l M), which needs only
second derivatives of f.  Everything is vectorised over rows of a point array.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DimensionMismatch
from .smooth_maps import MapJets, MapSpec, ScalarFunction, compose, eval_jets

_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class MalliavinSample:
    M: np.ndarray
    delta: float
    A: np.ndarray
    grad_delta: np.ndarray
    grad_norms: np.ndarray
    hess_norms: np.ndarray


@dataclass(frozen=True, eq=False)
class MalliavinBatch:
    """The same quantities as :class:`MalliavinSample`, stacked over N points."""

    M: np.ndarray  # (N, k, k)
    delta: np.ndarray  # (N,)
    A: np.ndarray  # (N, k, k)
    grad_delta: np.ndarray  # (N, n)
    grad_norms: np.ndarray  # (N, k)
    hess_norms: np.ndarray  # (N, k)
    jets: MapJets

    def __getitem__(self, i: int) -> MalliavinSample:
        return MalliavinSample(self.M[i], float(self.delta[i]), self.A[i], self.grad_delta[i],
                               self.grad_norms[i], self.hess_norms[i])


def _perm_sign(p) -> int:
    sign, seen = 1, list(p)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def det_small(M: np.ndarray) -> np.ndarray:
    """Leibniz-formula determinant of (..., k, k) with k <= 4 (branch-free)."""
    k = M.shape[-1]
    if k == 0:
        return np.ones(M.shape[:-2])
    out = np.zeros(M.shape[:-2])
    for p in permutations(range(k)):
        term = np.full(M.shape[:-2], float(_perm_sign(p)))
        for r in range(k):
            term = term * M[..., r, p[r]]
        out = out + term
    return out


def _minor(M: np.ndarray, row: int, col: int) -> np.ndarray:
    keep_r = [r for r in range(M.shape[-2]) if r != row]
    keep_c = [c for c in range(M.shape[-1]) if c != col]
    return M[..., keep_r, :][..., :, keep_c]


def adjugate_cofactor(M: np.ndarray, det=det_small) -> np.ndarray:
    """adj(M)[i, j] = (-1)^{i+j} * det(M without row j, column i)."""
    k = M.shape[-1]
    A = np.empty_like(M)
    if k == 1:
        A[..., 0, 0] = 1.0
        return A
    for i in range(k):
        for j in range(k):
            A[..., i, j] = (-1) ** (i + j) * det(_minor(M, j, i))
    return A


def det_and_adjugate(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Determinant and adjugate of a stack of k x k matrices.

    Explicit cofactors for k <= 4.  Larger k goes through LU (det * inverse),
    with a cofactor fallback wherever the condition number exceeds 1e12.
    """
    k = M.shape[-1]
    if k <= 4:
        return det_small(M), adjugate_cofactor(M)
    det = np.linalg.det(M)
    cond = np.linalg.cond(M)
    A = np.empty_like(M)
    ok = np.isfinite(cond) & (cond < _COND_LIMIT)
    if np.any(ok):
        A[ok] = det[ok][:, None, None] * np.linalg.inv(M[ok])
    if np.any(~ok):
        A[~ok] = adjugate_cofactor(M[~ok], det=np.linalg.det)
    return det, A


def malliavin_from_jets(mj: MapJets) -> MalliavinBatch:
    G = mj.grad  # (N, k, n)
    H = mj.hess  # (N, k, n, n)
    M = np.einsum("nia,nja->nij", G, G)
    M = 0.5 * (M + M.transpose(0, 2, 1))
    delta, A = det_and_adjugate(M)
    # d_l m_ij = (H_i g_j)_l + (H_j g_i)_l
    HG = np.einsum("nila,nja->nijl", H, G)
    dM = HG + HG.transpose(0, 2, 1, 3)
    grad_delta = np.einsum("nji,nijl->nl", A, dM)
    grad_norms = np.linalg.norm(G, axis=2)
    hess_norms = np.sqrt(np.sum(H**2, axis=(2, 3)))
    return MalliavinBatch(M, delta, A, grad_delta, grad_norms, hess_norms, mj)


def malliavin_batch(spec: MapSpec, X) -> MalliavinBatch:
    return malliavin_from_jets(eval_jets(spec, X))


def malliavin_at(spec: MapSpec, x) -> MalliavinSample:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != spec.dim_in:
        raise DimensionMismatch(f"{spec.name} expects a point in R^{spec.dim_in}, got R^{x.shape[0]}")
    return malliavin_batch(spec, x[None, :])[0]


def scale_of(M: np.ndarray) -> np.ndarray:
    """max(1, ||M||_max) per matrix."""
    return np.maximum(1.0, np.max(np.abs(M), axis=(-2, -1)))


def adjugate_residuals(mb: MalliavinBatch) -> np.ndarray:
    """||A M - delta I||_max / max(1, ||M||_max) per point."""
    k = mb.M.shape[-1]
    R = mb.A @ mb.M - mb.delta[:, None, None] * np.eye(k)
    return np.max(np.abs(R), axis=(1, 2)) / scale_of(mb.M)


def chain_identity_terms(spec: MapSpec, phi: ScalarFunction, X) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of M_f (d_1 phi(f), ..., d_k phi(f)) = (<grad(phi o f), grad f_j>)_j.

    The left side uses the gradient of phi evaluated at the image points; the
    right side differentiates phi o f by forward-mode composition.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mj = eval_jets(spec, X)
    M = np.einsum("nia,nja->nij", mj.grad, mj.grad)
    dphi = phi.jets_at(mj.value).grad  # (N, k)
    lhs = np.einsum("nij,nj->ni", M, dphi)
    comp = compose(phi, spec, X)
    rhs = np.einsum("na,nja->nj", comp.grad, mj.grad)
    return lhs, rhs


def chain_identity_residuals(spec: MapSpec, phi: ScalarFunction, X) -> np.ndarray:
    """Relative max-norm residual of the chain identity per point."""
    lhs, rhs = chain_identity_terms(spec, phi, X)
    scale = np.maximum(1.0, np.maximum(np.max(np.abs(lhs), axis=1), np.max(np.abs(rhs), axis=1)))
    return np.max(np.abs(lhs - rhs), axis=1) / scale


def chain_identity_residual(spec: MapSpec, phi: ScalarFunction, x) -> float:
    """Absolute max-norm residual of the chain identity at a single point."""
    lhs, rhs = chain_identity_terms(spec, phi, np.asarray(x, dtype=float).reshape(1, -1))
    return float(np.max(np.abs(lhs - rhs)))


def grad_delta_bound_terms(mb: MalliavinBatch, j: int) -> tuple[np.ndarray, np.ndarray]:
    """|<grad f_j, grad Delta_f>| and 2 (sum_m |grad f_m|)^{2k} sum_i |D^2 f_i|_HS."""
    k = mb.M.shape[-1]
    lhs = np.abs(np.einsum("na,na->n", mb.jets.grad[:, j], mb.grad_delta))
    rhs = 2.0 * np.sum(mb.grad_norms, axis=1) ** (2 * k) * np.sum(mb.hess_norms, axis=1)
    return lhs, rhs


def grad_delta_bound_margin(spec: MapSpec, j: int, x) -> tuple[float, float]:
    mb = malliavin_batch(spec, np.asarray(x, dtype=float).reshape(1, -1))
    lhs, rhs = grad_delta_bound_terms(mb, j)
    return float(lhs[0]), float(rhs[0])
