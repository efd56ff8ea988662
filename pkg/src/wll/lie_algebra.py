"""so(1,2m-1,C): torus, E/F/H/L root vectors and exact ad-gradings.

Exact matrices are ``DomainMatrix`` over ``QQ_I``; floating ones are numpy
arrays.  ``LieMatrix`` wraps either.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

ZERO = QQ_I(0)
ONE = QQ_I(1)
I_UNIT = QQ_I(0, 1)


def _q(v) -> object:
    """Coerce int / Fraction / complex-with-integer-parts into QQ_I."""
    if isinstance(v, complex):
        re, im = v.real, v.imag
        if re != int(re) or im != int(im):
            raise ValueError(f"cannot represent {v} exactly")
        return QQ_I(int(re), int(im))
    return QQ_I.convert(v)


def lorentz_metric_exact(n: int) -> DomainMatrix:
    return DomainMatrix.diag([-ONE] + [ONE] * (n - 1), QQ_I)


def _zeros(n: int) -> list[list]:
    return [[ZERO] * n for _ in range(n)]


@dataclass(frozen=True)
class LieMatrix:
    entries: object  # DomainMatrix (exact) or np.ndarray (float)
    m: int

    def __post_init__(self):
        shape = self.entries.shape
        if tuple(shape) != (2 * self.m, 2 * self.m):
            raise ValueError(f"expected {2 * self.m}x{2 * self.m}, got {shape}")

    @property
    def exact(self) -> bool:
        return isinstance(self.entries, DomainMatrix)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "LieMatrix":
        n = len(rows)
        if n % 2:
            raise ValueError("matrix size must be even")
        dm = DomainMatrix([[_q(v) for v in row] for row in rows], (n, n), QQ_I)
        return cls(dm, n // 2)

    def to_numpy(self) -> np.ndarray:
        if not self.exact:
            return np.asarray(self.entries, dtype=complex)
        rows = self.entries.to_list()
        return np.array([[complex(v.x) + 1j * complex(v.y) for v in row] for row in rows])

    def rows(self) -> list[list]:
        return self.entries.to_list() if self.exact else self.entries.tolist()

    def is_zero(self, tol: float = 1e-12) -> bool:
        if self.exact:
            return self.entries.is_zero_matrix
        return bool(np.max(np.abs(self.entries), initial=0.0) <= tol)

    def is_member(self, tol: float = 1e-12) -> bool:
        """A^t I + I A == 0."""
        n = 2 * self.m
        if self.exact:
            metric = lorentz_metric_exact(n)
            return (self.entries.transpose() * metric + metric * self.entries).is_zero_matrix
        metric = np.diag([-1.0] + [1.0] * (n - 1))
        a = np.asarray(self.entries)
        return bool(np.max(np.abs(a.T @ metric + metric @ a)) <= tol * max(1.0, np.max(np.abs(a))))

    def _coerce(self, other: "LieMatrix"):
        if other.m != self.m:
            raise ValueError(f"dimension mismatch: m={self.m} vs m={other.m}")
        if self.exact and other.exact:
            return self.entries, other.entries
        return self.to_numpy(), other.to_numpy()

    def __add__(self, other):
        a, b = self._coerce(other)
        return LieMatrix(a + b, self.m)

    def __sub__(self, other):
        a, b = self._coerce(other)
        return LieMatrix(a - b, self.m)

    def __neg__(self):
        return LieMatrix(-self.entries, self.m)

    def __matmul__(self, other):
        a, b = self._coerce(other)
        return LieMatrix(a * b if isinstance(a, DomainMatrix) else a @ b, self.m)

    def scale(self, c) -> "LieMatrix":
        if self.exact:
            return LieMatrix(self.entries * _q(c), self.m)
        return LieMatrix(np.asarray(self.entries) * c, self.m)

    def __eq__(self, other):
        if not isinstance(other, LieMatrix) or other.m != self.m:
            return NotImplemented
        a, b = self._coerce(other)
        if isinstance(a, DomainMatrix):
            return (a - b).is_zero_matrix
        return bool(np.allclose(a, b, atol=1e-12))

    def __hash__(self):
        return hash((self.m, str(self.rows())))

    def is_k_shaped(self) -> bool:
        """Block diagonal w.r.t. the 4 + (2m-4) split."""
        return _off_blocks_zero(self.rows(), 4, diagonal=False)

    def is_p_shaped(self) -> bool:
        return _off_blocks_zero(self.rows(), 4, diagonal=True)


def _off_blocks_zero(rows, split: int, diagonal: bool) -> bool:
    n = len(rows)
    for a in range(n):
        for b in range(n):
            same = (a < split) == (b < split)
            if same == diagonal and rows[a][b]:
                return False
    return True


# ----- torus --------------------------------------------------------------

@dataclass(frozen=True)
class TorusElement:
    coefficients: tuple

    def __post_init__(self):
        if len(self.coefficients) < 3:
            raise ValueError("a torus element needs m >= 3 coefficients")

    @property
    def m(self) -> int:
        return len(self.coefficients)

    def is_integral(self) -> bool:
        return all(float(c) == int(c) for c in self.coefficients)

    def matrix(self) -> LieMatrix:
        m = self.m
        rows = _zeros(2 * m)
        a = _q(self.coefficients[0])
        rows[0][1] = rows[1][0] = a * I_UNIT
        for r in range(1, m):
            c = _q(self.coefficients[r])
            rows[2 * r][2 * r + 1] = c
            rows[2 * r + 1][2 * r] = -c
        return LieMatrix(DomainMatrix(rows, (2 * m, 2 * m), QQ_I), m)


def xi_hat(r: int, m: int) -> TorusElement:
    """Torus basis element with a_rr = 1 (r is 1-based)."""
    if not 1 <= r <= m:
        raise ValueError(f"index r={r} out of range 1..{m}")
    return TorusElement(tuple(1 if k == r - 1 else 0 for k in range(m)))


# ----- root vectors -------------------------------------------------------

_BLOCK_R1 = {
    "E": ((1, 1j), (1, 1j)),
    "F": ((1, 1j), (-1, -1j)),
    "H": ((1, -1j), (1, -1j)),
    "L": ((1, -1j), (-1, 1j)),
}
_BLOCK_R2 = {
    "E": ((1, 1j), (1j, -1)),
    "F": ((1, 1j), (-1j, 1)),
    "H": ((1, -1j), (1j, 1)),
    "L": ((1, -1j), (-1j, -1)),
}
KINDS = ("E", "F", "H", "L")


def basis_element(kind: str, r: int, j: int, m: int) -> LieMatrix:
    """Root vector with block c_rj as tabulated and its membership partner c_jr.

    For r = 1 the partner is c_j1 = -c_1j^t I_{1,1}; for r >= 2 it is -c_rj^t.
    Indices are 1-based.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if not (1 <= r < j <= m) or m < 3:
        raise ValueError(f"need 1 <= r < j <= m with m >= 3, got r={r}, j={j}, m={m}")
    table = _BLOCK_R1 if r == 1 else _BLOCK_R2
    c = [[_q(v) for v in row] for row in table[kind]]
    sign = (-ONE, ONE) if r == 1 else (ONE, ONE)
    rows = _zeros(2 * m)
    r0, j0 = 2 * (r - 1), 2 * (j - 1)
    for a in range(2):
        for b in range(2):
            rows[r0 + a][j0 + b] = c[a][b]
            # partner: -(c^t) with column a scaled by the r-block metric
            rows[j0 + b][r0 + a] = -c[a][b] * sign[a]
    return LieMatrix(DomainMatrix(rows, (2 * m, 2 * m), QQ_I), m)


def bracket(a: LieMatrix, b: LieMatrix) -> LieMatrix:
    return a @ b - b @ a


# ----- ambient basis and grading -----------------------------------------

def ambient_basis(m: int) -> list[tuple[int, int]]:
    """Index pairs (a, b), a < b, of X_ab = I (e_a e_b^t - e_b e_a^t)."""
    n = 2 * m
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def ambient_matrix(a: int, b: int, m: int, coeff=ONE) -> list[list]:
    n = 2 * m
    rows = _zeros(n)
    sa = -ONE if a == 0 else ONE
    sb = -ONE if b == 0 else ONE
    rows[a][b] = sa * coeff
    rows[b][a] = -sb * coeff
    return rows


def ambient_coordinates(x: LieMatrix) -> list:
    """Coordinates (I X)_ab of a member X in the ambient basis."""
    rows = x.rows()
    return [(-rows[a][b] if a == 0 else rows[a][b]) for a, b in ambient_basis(x.m)]


def from_ambient_coordinates(coords: Sequence, m: int) -> LieMatrix:
    n = 2 * m
    rows = _zeros(n)
    for (a, b), c in zip(ambient_basis(m), coords):
        c = _q(c)
        if not c:
            continue
        sa = -ONE if a == 0 else ONE
        sb = -ONE if b == 0 else ONE
        rows[a][b] += sa * c
        rows[b][a] -= sb * c
    return LieMatrix(DomainMatrix(rows, (n, n), QQ_I), m)


@dataclass(frozen=True)
class GradedDecomposition:
    xi: TorusElement
    spaces: dict  # grade -> list[LieMatrix]

    @property
    def height(self) -> int:
        return max(self.spaces)

    def dimensions(self) -> dict:
        return {j: len(v) for j, v in sorted(self.spaces.items())}

    def total_dimension(self) -> int:
        return sum(len(v) for v in self.spaces.values())

    def positive_part(self) -> list[LieMatrix]:
        return [x for j, v in sorted(self.spaces.items()) if j > 0 for x in v]

    def odd_positive_part(self) -> list[LieMatrix]:
        return [x for j, v in sorted(self.spaces.items()) if j > 0 and j % 2 for x in v]


def _block_of(index: int) -> int:
    return index // 2


def _ad_numpy(xi: TorusElement) -> np.ndarray:
    """ad(xi) in ambient coordinates; entries are Gaussian integers, so
    complex double arithmetic is exact here."""
    m = xi.m
    basis = ambient_basis(m)
    x = xi.matrix().to_numpy()
    metric = np.diag([-1.0] + [1.0] * (2 * m - 1))
    cols = []
    for a, b in basis:
        e = np.zeros((2 * m, 2 * m))
        e[a, b], e[b, a] = 1.0, -1.0
        xab = metric @ e
        img = metric @ (x @ xab - xab @ x)
        cols.append([img[p, q] for p, q in basis])
    return np.array(cols).T


def _gauss(v: complex):
    return QQ_I(int(round(v.real)), int(round(v.imag)))


def grade(xi: TorusElement) -> GradedDecomposition:
    """Exact eigenspaces of ad(xi) on the ambient basis.

    ad(xi) preserves the span of ambient elements whose indices sit in a
    fixed pair of 2x2 blocks, so the ambient coordinates split into small
    invariant pieces; each piece is diagonalized exactly over Q(i).
    """
    if not xi.is_integral():
        raise ValueError(f"grading needs integer coefficients, got {xi.coefficients}")
    m = xi.m
    basis = ambient_basis(m)
    ad_full = _ad_numpy(xi)
    groups: dict[tuple[int, int], list[int]] = {}
    for idx, (a, b) in enumerate(basis):
        groups.setdefault((_block_of(a), _block_of(b)), []).append(idx)

    spaces: dict[int, list[LieMatrix]] = {}
    n_abs = [abs(int(c)) for c in xi.coefficients]
    for (p, q), members in groups.items():
        k = len(members)
        ad = DomainMatrix([[_gauss(ad_full[r, c]) for c in members] for r in members], (k, k), QQ_I)
        if p == q:
            candidates = {0}
        else:
            s, d = n_abs[p] + n_abs[q], n_abs[p] - n_abs[q]
            candidates = {s, -s, d, -d}
        found = 0
        for j in sorted(candidates):
            null = (ad - DomainMatrix.eye(k, QQ_I) * QQ_I(0, j)).nullspace()
            if null.is_zero_matrix:
                continue
            for vec in null.to_list():
                full = [ZERO] * len(basis)
                for t, c in zip(members, vec):
                    full[t] = c
                spaces.setdefault(j, []).append(from_ambient_coordinates(full, m))
                found += 1
        if found != k:
            raise ArithmeticError(f"ad(xi) not diagonalizable on block pair {(p, q)}")
    return GradedDecomposition(xi, dict(sorted(spaces.items())))


def span_rank(mats: Iterable[LieMatrix]) -> int:
    """Exact rank of the span of the given members."""
    mats = list(mats)
    if not mats:
        return 0
    rows = [[_q(c) for c in ambient_coordinates(x)] for x in mats]
    return DomainMatrix(rows, (len(rows), len(rows[0])), QQ_I).rank()


def same_span(a: Sequence[LieMatrix], b: Sequence[LieMatrix]) -> bool:
    ra, rb = span_rank(a), span_rank(b)
    return ra == rb == span_rank(list(a) + list(b))


def parity_split_check(xi: TorusElement) -> bool:
    """Odd grades land in p, even grades in k."""
    g = grade(xi)
    for j, vecs in g.spaces.items():
        for v in vecs:
            if j % 2 and not v.is_p_shaped():
                return False
            if not j % 2 and not v.is_k_shaped():
                return False
    return True
