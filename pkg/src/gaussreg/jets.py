"""Second-order forward-mode differentiation over batches of points.

A :class:`Jet` carries value, gradient and Hessian of a scalar function at
``N`` points simultaneously.  Closure-backed maps are written as ordinary
Python functions of coordinate jets; the arithmetic below propagates exact
first and second derivatives (no finite differences).
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100

    def __init__(self, val, grad, hess):
        self.val = val  # (N,)
        self.grad = grad  # (N, n)
        self.hess = hess  # (N, n, n)

    @property
    def dim(self) -> int:
        return self.grad.shape[1]

    @classmethod
    def variables(cls, X: np.ndarray) -> list["Jet"]:
        """Coordinate jets x_1..x_n at the rows of X."""
        X = np.asarray(X, dtype=float)
        N, n = X.shape
        out = []
        for i in range(n):
            g = np.zeros((N, n))
            g[:, i] = 1.0
            out.append(cls(X[:, i].copy(), g, np.zeros((N, n, n))))
        return out

    @classmethod
    def constant(cls, c, like: "Jet") -> "Jet":
        N, n = like.grad.shape
        return cls(np.full(N, float(c)), np.zeros((N, n)), np.zeros((N, n, n)))

    # chain rule for a scalar function with derivatives d0, d1, d2 at self.val
    def _apply(self, d0, d1, d2) -> "Jet":
        g = self.grad
        hess = d1[:, None, None] * self.hess + d2[:, None, None] * (g[:, :, None] * g[:, None, :])
        return Jet(d0, d1[:, None] * g, hess)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            outer = a.grad[:, :, None] * b.grad[:, None, :]
            hess = a.val[:, None, None] * b.hess + b.val[:, None, None] * a.hess + outer + outer.transpose(0, 2, 1)
            return Jet(a.val * b.val, a.val[:, None] * b.grad + b.val[:, None] * a.grad, hess)
        return Jet(self.val * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet":
        v = self.val
        return self._apply(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            return (self ** (-k)).reciprocal()
        if k == 0:
            return Jet.constant(1.0, self)
        v = self.val
        d1 = k * v ** (k - 1)
        d2 = k * (k - 1) * v ** (k - 2) if k >= 2 else np.zeros_like(v)
        return self._apply(v**k, d1, d2)


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.val), np.cos(a.val)
    return a._apply(s, c, -s)


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.val), np.cos(a.val)
    return a._apply(c, -s, -c)


def exp(a: Jet) -> Jet:
    e = np.exp(a.val)
    return a._apply(e, e, e)


def tanh(a: Jet) -> Jet:
    t = np.tanh(a.val)
    d1 = 1.0 - t**2
    return a._apply(t, d1, -2.0 * t * d1)


def dot(coeffs, xs: list[Jet]) -> Jet:
    """Linear form sum_i coeffs[i] * xs[i]."""
    out = None
    for c, x in zip(coeffs, xs):
        if c == 0:
            continue
        out = x * c if out is None else out + x * c
    return out if out is not None else Jet.constant(0.0, xs[0])
