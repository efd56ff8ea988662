"""Lorentz-Minkowski space R^{1,2m-1} and the light-cone model of the sphere.

Every function here is generic over the scalar type: plain Python/numpy
numbers for the floating backend, ``sympy.QQ_I`` elements (or ``Fraction``)
for the exact one.  Nothing conjugates; the complex extension of the metric
is bilinear.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TAU_LIGHT = 1e-10


@dataclass(frozen=True)
class MetricSignature:
    """diag(-1 x p, +1 x (dim - p)); p = 1 for every metric used here."""

    dim: int
    p: int = 1

    def __post_init__(self):
        if not 0 <= self.p <= self.dim:
            raise ValueError(f"signature p={self.p} outside 0..{self.dim}")

    def diagonal(self) -> list[int]:
        return [-1] * self.p + [1] * (self.dim - self.p)

    def matrix(self) -> np.ndarray:
        return np.diag(np.array(self.diagonal(), dtype=float))


def metric(dim: int) -> np.ndarray:
    """I_{1,dim-1} as a float array."""
    return MetricSignature(dim).matrix()


I13 = metric(4)
I11 = metric(2)


@dataclass(frozen=True)
class LorentzVector:
    entries: tuple

    def __post_init__(self):
        n = len(self.entries)
        if n < 6 or n % 2:
            raise ValueError(f"a LorentzVector needs an even length >= 6, got {n}")

    @property
    def m(self) -> int:
        return len(self.entries) // 2

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


def lorentz_inner(x: Sequence, y: Sequence):
    """-x0*y0 + sum_j xj*yj; works on sequences or on stacked numpy arrays."""
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        x = np.asarray(x)
        y = np.asarray(y)
        if x.shape[-1] != y.shape[-1]:
            raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
        return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    acc = -(x[0] * y[0])
    for a, b in zip(x[1:], y[1:]):
        acc = acc + a * b
    return acc


def _is_exact_zero(v) -> bool:
    return not isinstance(v, (float, complex, np.floating, np.complexfloating)) and not v


def is_forward_lightlike(x: Sequence, tol: float = TAU_LIGHT) -> bool:
    """True iff <x,x> = 0 (relative to |x|^2) and x0 > 0."""
    q = lorentz_inner(x, x)
    if _is_exact_zero(q):
        return x[0] > 0
    scale = float(sum(abs(complex(v)) ** 2 for v in x))
    if scale == 0.0:
        return False
    return abs(complex(q)) <= tol * scale and float(np.real(x[0])) > 0


def projectivize(x: Sequence, tol: float = TAU_LIGHT) -> np.ndarray:
    """Map a forward lightlike vector to its point (x1..xN)/x0 on the sphere."""
    if not is_forward_lightlike(x, tol):
        raise ValueError("projectivize needs a forward lightlike vector")
    x = np.asarray(x, dtype=float)
    return x[1:] / x[0]


def lift_to_cone(y: Sequence) -> np.ndarray:
    """(1, y) for a unit vector y; inverse of projectivize up to scale."""
    y = np.asarray(y)
    return np.concatenate([np.ones(y.shape[:-1] + (1,), dtype=y.dtype), y], axis=-1)
