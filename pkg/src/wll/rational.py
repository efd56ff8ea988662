"""Univariate rational functions of z over Q(i), kept in reduced form."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np
from sympy import QQ, QQ_I
from sympy.polys.rings import ring

RING, Z = ring("z", QQ_I)

Scalar = Union[int, Fraction, complex, str, Sequence]


def parse_scalar(v) -> object:
    """Gaussian rational from int, Fraction, "p/q", [re, im] or an exact
    QQ_I element.  Floats are accepted only when integral."""
    if isinstance(v, type(QQ_I(0))):
        return v
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex coefficient needs [re, im], got {v!r}")
        re, im = (_parse_real(x) for x in v)
        return QQ_I(re, im)
    if isinstance(v, complex):
        return QQ_I(_parse_real(v.real), _parse_real(v.imag))
    return QQ_I(_parse_real(v), 0)


def _parse_real(x):
    if isinstance(x, str):
        f = Fraction(x.strip())
    elif isinstance(x, float):
        if not x.is_integer():
            raise ValueError(f"inexact coefficient {x!r}; use 'p/q' strings")
        f = Fraction(int(x))
    else:
        f = Fraction(x)
    return QQ(f.numerator, f.denominator)


def _fmt_real(q) -> Union[int, str]:
    f = Fraction(int(q.numerator), int(q.denominator))
    return int(f) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def to_complex(c) -> complex:
    return complex(float(c.x), float(c.y))


def _poly_from_ascending(coeffs: Iterable) -> object:
    p = RING.zero
    for k, c in enumerate(coeffs):
        c = parse_scalar(c)
        if c:
            p += RING(c) * Z**k
    return p


def _ascending(p) -> list:
    if not p:
        return []
    out = [QQ_I(0)] * (p.degree() + 1)
    for (k,), c in p.terms():
        out[k] = c
    return out


class RationalFunction:
    """num/den with gcd(num, den) = 1 and den monic."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if den is None:
            den = RING.one
        if not den:
            raise ZeroDivisionError("denominator is identically zero")
        if not num:
            num, den = RING.zero, RING.one
        else:
            if den.degree() > 0:
                g = num.gcd(den)
                if g.degree() > 0:
                    num, den = num.quo(g), den.quo(g)
            lc = den.LC
            if lc != QQ_I.one:
                num, den = num.quo_ground(lc), den.quo_ground(lc)
        self.num = num
        self.den = den

    # construction
    @classmethod
    def const(cls, c) -> "RationalFunction":
        return cls(RING(parse_scalar(c)))

    @classmethod
    def z(cls) -> "RationalFunction":
        return cls(Z)

    @classmethod
    def from_coeffs(cls, num: Sequence, den: Sequence = (1,)) -> "RationalFunction":
        """Ascending coefficient lists."""
        return cls(_poly_from_ascending(num), _poly_from_ascending(den))

    @classmethod
    def coerce(cls, v) -> "RationalFunction":
        if isinstance(v, RationalFunction):
            return v
        if isinstance(v, dict):
            return cls.from_json(v)
        return cls.const(v)

    # serialization
    def to_json(self) -> dict:
        enc = lambda p: [[_fmt_real(c.x), _fmt_real(c.y)] for c in _ascending(p)] or [[0, 0]]
        return {"num": enc(self.num), "den": enc(self.den)}

    @classmethod
    def from_json(cls, d: dict) -> "RationalFunction":
        if "num" not in d:
            raise ValueError("rational function JSON needs a 'num' list")
        return cls.from_coeffs(d["num"], d.get("den", [1]))

    # arithmetic
    def __add__(self, o):
        o = RationalFunction.coerce(o)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, o):
        return self + (-RationalFunction.coerce(o))

    def __rsub__(self, o):
        return RationalFunction.coerce(o) - self

    def __mul__(self, o):
        o = RationalFunction.coerce(o)
        return RationalFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = RationalFunction.coerce(o)
        if not o.num:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, o):
        return RationalFunction.coerce(o) / self

    def __pow__(self, k: int):
        if k < 0:
            return RationalFunction.const(1) / (self ** (-k))
        return RationalFunction(self.num**k, self.den**k)

    def __eq__(self, o):
        try:
            o = RationalFunction.coerce(o)
        except (TypeError, ValueError):
            return NotImplemented
        return not (self - o).num

    def __hash__(self):
        return hash((str(self.num), str(self.den)))

    def __bool__(self):
        return bool(self.num)

    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        return self.num.degree() <= 0 and self.den.degree() <= 0

    def derivative(self) -> "RationalFunction":
        n, d = self.num, self.den
        return RationalFunction(n.diff(Z) * d - n * d.diff(Z), d * d)

    # evaluation
    def at(self, z0) -> object:
        """Exact value at a Gaussian rational point."""
        z0 = parse_scalar(z0)
        d = self.den(z0)
        if not d:
            raise ZeroDivisionError(f"pole at z={z0}")
        return self.num(z0) / d

    def coeffs_numeric(self) -> tuple[np.ndarray, np.ndarray]:
        """Descending complex coefficients for np.polyval."""
        conv = lambda p: np.array([to_complex(c) for c in reversed(_ascending(p))] or [0j])
        return conv(self.num), conv(self.den)

    def __call__(self, z):
        n, d = self.coeffs_numeric()
        return np.polyval(n, z) / np.polyval(d, z)

    def poles(self) -> np.ndarray:
        _, d = self.coeffs_numeric()
        return np.roots(d) if len(d) > 1 else np.array([], dtype=complex)

    def degree(self) -> tuple[int, int]:
        return max(self.num.degree(), 0), self.den.degree()

    def __repr__(self):
        if self.den == RING.one:
            return f"RationalFunction({self.num})"
        return f"RationalFunction(({self.num})/({self.den}))"


def rf(v) -> RationalFunction:
    return RationalFunction.coerce(v)


ZERO_RF = RationalFunction(RING.zero)
ONE_RF = RationalFunction(RING.one)
I_RF = RationalFunction.const([0, 1])
Z_RF = RationalFunction.z()


def det(mat: list[list[RationalFunction]]) -> RationalFunction:
    """Fraction-preserving Laplace expansion; fine for the <= 4x4 minors used."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    acc = ZERO_RF
    for c in range(n):
        if mat[0][c].is_zero():
            continue
        minor = [row[:c] + row[c + 1:] for row in mat[1:]]
        term = mat[0][c] * det(minor)
        acc = acc + term if c % 2 == 0 else acc - term
    return acc


def generic_rank_of(mat: list[list[RationalFunction]]) -> int:
    """Rank over the field C(z) by exact minors."""
    import itertools

    rows, cols = len(mat), len(mat[0]) if mat else 0
    best = 0
    for k in range(1, min(rows, cols) + 1):
        hit = False
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.combinations(range(cols), k):
                if det([[mat[r][c] for c in cs] for r in rs]):
                    hit = True
                    break
            if hit:
                break
        if not hit:
            break
        best = k
    return best
