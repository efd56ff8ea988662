"""Truncated bivariate Taylor series in (z, zbar).

A ``Jet`` stores c[..., a, b], the coefficient of dz^a dzbar^b, for
a + b <= order.  z and zbar are independent variables, so a real-valued
map written as a function of (z, zb) differentiates exactly (up to
rounding) in both Wirtinger directions.  Leading axes broadcast like numpy.
"""
from __future__ import annotations

from math import factorial

import numpy as np


def _mask(order: int, size: int) -> np.ndarray:
    a = np.arange(size)
    return (a[:, None] + a[None, :]) <= order


class Jet:
    __array_priority__ = 100

    def __init__(self, c, order: int):
        self.c = np.asarray(c, dtype=complex)
        self.order = int(order)

    # construction -------------------------------------------------------
    @property
    def size(self) -> int:
        return self.c.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.c.shape[:-2]

    @classmethod
    def constant(cls, value, order: int, size: int | None = None) -> "Jet":
        size = order + 1 if size is None else size
        v = np.asarray(value, dtype=complex)
        c = np.zeros(v.shape + (size, size), complex)
        c[..., 0, 0] = v
        return cls(c, order)

    @classmethod
    def variables(cls, z0, order: int) -> tuple["Jet", "Jet"]:
        """The pair (z, zb) expanded around z0 (array-valued allowed)."""
        z0 = np.asarray(z0, dtype=complex)
        z = cls.constant(z0, order)
        zb = cls.constant(np.conj(z0), order)
        if order >= 1:
            z.c[..., 1, 0] = 1
            zb.c[..., 0, 1] = 1
        return z, zb

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.size)

    def _order(self, other: "Jet") -> int:
        return min(self.order, other.order)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Jet):
            c = self.c.copy()
            c[..., 0, 0] += other
            return Jet(c, self.order)
        return Jet(self.c + other.c, self._order(other))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other)[..., None, None], self.order)
        n = self._order(other)
        x, y = self.c, other.c
        shape = np.broadcast_shapes(x.shape, y.shape)
        out = np.zeros(shape, complex)
        s = self.size
        for i in range(n + 1):
            for j in range(n + 1 - i):
                out[..., i:, j:] += x[..., i, j, None, None] * y[..., : s - i, : s - j]
        out[..., ~_mask(n, s)] = 0
        return Jet(out, n)

    __rmul__ = __mul__

    def _series(self, derivs) -> "Jet":
        """f(self) given f^(k)(x0) for k = 0..order."""
        x0 = self.c[..., 0, 0]
        u = Jet(self.c.copy(), self.order)
        u.c[..., 0, 0] = 0
        out = Jet.constant(derivs[0], self.order, self.size)
        term = Jet.constant(np.ones_like(x0), self.order, self.size)
        for k in range(1, self.order + 1):
            term = term * u
            out = out + term * (derivs[k] / factorial(k))
        return out

    def reciprocal(self) -> "Jet":
        x0 = self.c[..., 0, 0]
        if np.any(x0 == 0):
            raise ZeroDivisionError("jet with zero constant term")
        derivs = [(-1) ** k * factorial(k) * x0 ** (-(k + 1)) for k in range(self.order + 1)]
        return self._series(derivs)

    def power(self, alpha: float) -> "Jet":
        """self**alpha on the principal branch (x0 away from the cut)."""
        x0 = self.c[..., 0, 0]
        derivs, coef = [], 1.0
        for k in range(self.order + 1):
            derivs.append(coef * x0 ** (alpha - k))
            coef *= alpha - k
        return self._series(derivs)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def exp(self) -> "Jet":
        e = np.exp(self.c[..., 0, 0])
        return self._series([e] * (self.order + 1))

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1 / np.asarray(other, dtype=complex))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, int) and k >= 0:
            out = Jet.constant(np.ones(self.shape), self.order, self.size)
            for _ in range(k):
                out = out * self
            return out
        return self.power(k)

    # calculus -----------------------------------------------------------
    def dz(self) -> "Jet":
        if self.order < 1:
            raise ValueError("jet exhausted")
        c = np.zeros_like(self.c)
        a = np.arange(1, self.size)
        c[..., :-1, :] = self.c[..., 1:, :] * a[:, None]
        return Jet(c, self.order - 1)

    def dzb(self) -> "Jet":
        if self.order < 1:
            raise ValueError("jet exhausted")
        c = np.zeros_like(self.c)
        a = np.arange(1, self.size)
        c[..., :, :-1] = self.c[..., :, 1:] * a[None, :]
        return Jet(c, self.order - 1)

    def conj(self) -> "Jet":
        """The jet of the complex-conjugate function."""
        return Jet(np.conj(self.c).swapaxes(-1, -2), self.order)

    @property
    def real(self) -> "Jet":
        return (self + self.conj()) * 0.5

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0, 0]

    def derivative(self, a: int, b: int) -> np.ndarray:
        """d^a/dz^a d^b/dzb^b at the expansion point."""
        if a + b > self.order:
            raise ValueError(f"order {a + b} exceeds jet order {self.order}")
        return self.c[..., a, b] * factorial(a) * factorial(b)

    # shape handling -----------------------------------------------------
    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[idx + (slice(None), slice(None))], self.order)

    def expand(self) -> "Jet":
        """Add a trailing leading-axis so a scalar jet multiplies vectors."""
        return Jet(self.c[..., None, :, :], self.order)

    def sum(self, axis: int = -1) -> "Jet":
        ax = axis if axis >= 0 else axis - 2
        return Jet(self.c.sum(axis=ax), self.order)

    @staticmethod
    def stack(jets, axis: int = -1) -> "Jet":
        ax = axis if axis >= 0 else axis - 2
        order = min(j.order for j in jets)
        cs = np.broadcast_arrays(*[j.c for j in jets])
        return Jet(np.stack(cs, axis=ax), order)

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order})"


def lorentz_dot(u: Jet, v: Jet) -> Jet:
    """Bilinear -u0 v0 + sum ui vi over the last leading axis."""
    p = u * v
    return p.sum(-1) - 2 * p[..., 0]


def euclid_dot(u: Jet, v: Jet) -> Jet:
    return (u * v).sum(-1)


def fit_jet(offsets: np.ndarray, values: np.ndarray, order: int) -> Jet:
    """Least-squares Taylor jet from samples f(z0 + offsets).

    ``values`` has shape (len(offsets), ...).  Used for sampled maps where
    no closed form is available.
    """
    w = np.asarray(offsets, complex)
    idx = [(a, b) for a in range(order + 1) for b in range(order + 1 - a)]
    scale = np.abs(w).max() or 1.0
    ws = w / scale
    A = np.stack([ws**a * np.conj(ws) ** b for a, b in idx], axis=1)
    vals = np.asarray(values, complex)
    flat = vals.reshape(len(w), -1)
    sol, *_ = np.linalg.lstsq(A, flat, rcond=None)
    c = np.zeros(vals.shape[1:] + (order + 1, order + 1), complex)
    for k, (a, b) in enumerate(idx):
        c[..., a, b] = sol[k].reshape(vals.shape[1:]) / scale ** (a + b)
    return Jet(c, order)
