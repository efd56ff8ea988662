"""Normalized potentials eta = lambda^-1 (0, B; -B^t I13, 0) dz.

B is 4 x (2m-4); its columns come in pairs (v_j, vhat_j), j = 3..m, each of
kind "i" or kind "ii".  Everything is checked with exact rational-function
arithmetic over Q(i).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .rational import RING, I_RF, ONE_RF, ZERO_RF, Z_RF, RationalFunction, generic_rank_of, rf

KIND_FUNCTIONS = {"i": ("h1", "h1hat", "h3", "h3hat"), "ii": ("h1", "h2", "h3", "h4")}
LORENTZ_SIGNS = (-1, 1, 1, 1)


class PotentialError(ValueError):
    pass


class IsotropyError(PotentialError):
    """B^t I13 B != 0; ``columns`` are 1-based column indices of B, ``pairs``
    the corresponding pair indices j in 3..m."""

    def __init__(self, columns: tuple[int, int], pairs: tuple[int, int], residual: RationalFunction):
        self.columns = columns
        self.pairs = pairs
        self.residual = residual
        super().__init__(
            f"isotropy fails between columns {columns} (pairs j={pairs[0]}, l={pairs[1]}): "
            f"residual {residual!r}"
        )


class DegenerateInput(PotentialError):
    pass


def _lorentz4_raw(u: Sequence[RationalFunction], v: Sequence[RationalFunction]):
    """Unreduced numerator and denominator of <u, v>; skips gcds."""
    num, den = RING.zero, RING.one
    for s, a, b in zip(LORENTZ_SIGNS, u, v):
        if not a.num or not b.num:
            continue
        tn, td = a.num * b.num, a.den * b.den
        if s < 0:
            tn = -tn
        if td == den:
            num = num + tn
        else:
            num, den = num * td + tn * den, den * td
    return num, den


def lorentz4(u: Sequence[RationalFunction], v: Sequence[RationalFunction]) -> RationalFunction:
    num, den = _lorentz4_raw(u, v)
    return RationalFunction(num, den)


@dataclass(frozen=True)
class ColumnPair:
    kind: str
    functions: Mapping[str, RationalFunction]

    def __post_init__(self):
        if self.kind not in KIND_FUNCTIONS:
            raise PotentialError(f"pair kind must be 'i' or 'ii', got {self.kind!r}")
        names = KIND_FUNCTIONS[self.kind]
        extra = set(self.functions) - set(names)
        if extra:
            raise PotentialError(f"unexpected functions {sorted(extra)} for kind {self.kind}")
        fixed = {n: rf(self.functions.get(n, ZERO_RF)) for n in names}
        object.__setattr__(self, "functions", fixed)

    def columns(self) -> tuple[list[RationalFunction], list[RationalFunction]]:
        f = self.functions
        if self.kind == "i":
            v = [f["h1"], f["h1"], f["h3"], I_RF * f["h3"]]
            vh = [f["h1hat"], f["h1hat"], f["h3hat"], I_RF * f["h3hat"]]
        else:
            v = [f["h1"], f["h2"], f["h3"], f["h4"]]
            vh = [I_RF * x for x in v]
        return v, vh

    def to_json(self) -> dict:
        return {"kind": self.kind, "functions": {k: v.to_json() for k, v in self.functions.items()}}

    @classmethod
    def from_json(cls, d: dict) -> "ColumnPair":
        try:
            kind = d["kind"]
            funcs = {k: RationalFunction.from_json(v) for k, v in d.get("functions", {}).items()}
        except (KeyError, TypeError) as exc:
            raise PotentialError(f"malformed pair: {exc}") from exc
        return cls(kind, funcs)


def pair_i(h1, h1hat, h3, h3hat) -> ColumnPair:
    return ColumnPair("i", {"h1": rf(h1), "h1hat": rf(h1hat), "h3": rf(h3), "h3hat": rf(h3hat)})


def pair_ii(h1, h2, h3, h4) -> ColumnPair:
    return ColumnPair("ii", {"h1": rf(h1), "h2": rf(h2), "h3": rf(h3), "h4": rf(h4)})


def pair_ii_from_vector(v: Sequence[RationalFunction]) -> ColumnPair:
    return pair_ii(*v)


def pair_i_from_vectors(v: Sequence[RationalFunction], vh: Sequence[RationalFunction]) -> ColumnPair:
    """Kind-i pair from two vectors of shape (a, a, c, ic)."""
    for w in (v, vh):
        if w[0] != w[1] or w[3] != I_RF * w[2]:
            raise PotentialError("vector is not of the kind-i shape (a, a, c, ic)")
    return pair_i(v[0], vh[0], v[2], vh[2])


@dataclass(frozen=True)
class NormalizedPotential:
    m: int
    pairs: tuple[ColumnPair, ...]
    label: str = ""
    poles: tuple[complex, ...] = field(default=(), compare=False)

    @property
    def type_tag(self) -> int:
        return 1 + sum(p.kind == "ii" for p in self.pairs)

    @property
    def B1(self) -> list[list[RationalFunction]]:
        cols = []
        for p in self.pairs:
            cols.extend(p.columns())
        return [[c[r] for c in cols] for r in range(4)]

    def columns(self) -> list[list[RationalFunction]]:
        cols = []
        for p in self.pairs:
            cols.extend(p.columns())
        return cols

    def eta_minus1(self) -> list[list[RationalFunction]]:
        """The 2m x 2m block (0, B; -B^t I13, 0)."""
        n, b = 2 * self.m, self.B1
        out = [[ZERO_RF] * n for _ in range(n)]
        for r in range(4):
            for c in range(n - 4):
                out[r][4 + c] = b[r][c]
                out[4 + c][r] = -b[r][c] if LORENTZ_SIGNS[r] > 0 else b[r][c]
        return out

    def B1_numeric(self, z) -> np.ndarray:
        """B evaluated on an array of points; shape z.shape + (4, 2m-4)."""
        z = np.asarray(z, dtype=complex)
        b = self.B1
        out = np.empty(z.shape + (4, len(b[0])), dtype=complex)
        for r in range(4):
            for c in range(len(b[0])):
                out[..., r, c] = b[r][c](z)
        return out

    def to_json(self) -> dict:
        d = {"m": self.m, "pairs": [p.to_json() for p in self.pairs]}
        if self.label:
            d["label"] = self.label
        return d

    def describe(self) -> dict:
        return {
            "m": self.m,
            "label": self.label,
            "type": self.type_tag,
            "kinds": [p.kind for p in self.pairs],
            "rank": generic_rank(self),
            "s_willmore": is_s_willmore(self),
            "poles": [[float(p.real), float(p.imag)] for p in self.poles],
        }


def isotropy_residuals(pairs: Sequence[ColumnPair], raw: bool = False):
    """Yield ((col_a, col_b), (j, l), <c_a, c_b>) over all column pairs a <= b."""
    cols = []
    owner = []
    for k, p in enumerate(pairs):
        for c in p.columns():
            cols.append(c)
            owner.append(k + 3)
    for a in range(len(cols)):
        for b in range(a, len(cols)):
            f = _lorentz4_raw if raw else lorentz4
            yield (a + 1, b + 1), (owner[a], owner[b]), f(cols[a], cols[b])


def assemble(pairs: Sequence[ColumnPair], m: int | None = None, label: str = "") -> NormalizedPotential:
    """Validate B^t I13 B = 0 exactly and build the potential."""
    pairs = tuple(pairs)
    if m is None:
        m = len(pairs) + 2
    if m < 3 or len(pairs) != m - 2:
        raise PotentialError(f"m={m} needs {m - 2} column pairs, got {len(pairs)}")
    for cols, js, (num, den) in isotropy_residuals(pairs, raw=True):
        if num:
            raise IsotropyError(cols, js, RationalFunction(num, den))
    poles = set()
    for p in pairs:
        for f in p.functions.values():
            for root in f.poles():
                poles.add(complex(round(root.real, 12), round(root.imag, 12)))
    return NormalizedPotential(m, pairs, label, tuple(sorted(poles, key=lambda c: (c.real, c.imag))))


def potential_from_json(d: dict) -> NormalizedPotential:
    if "builder" in d:
        return build_named(d)
    try:
        pairs = [ColumnPair.from_json(p) for p in d["pairs"]]
    except (KeyError, TypeError) as exc:
        raise PotentialError(f"malformed potential: {exc}") from exc
    return assemble(pairs, d.get("m"), d.get("label", ""))


def generic_rank(p: NormalizedPotential) -> int:
    return generic_rank_of(p.B1)


def is_s_willmore(p: NormalizedPotential) -> bool:
    return generic_rank(p) == 1


# ----- normal forms and builders -------------------------------------------

def isotropic_pair_from_functions(h1, h2) -> tuple[list[RationalFunction], list[RationalFunction]]:
    """v1 = (1+h1h2, -1+h1h2, h1+h2, -i(h1-h2)), v2 = (h1, h1, 1, i)."""
    h1, h2 = rf(h1), rf(h2)
    p = h1 * h2
    v1 = [ONE_RF + p, p - ONE_RF, h1 + h2, -I_RF * (h1 - h2)]
    v2 = [h1, h1, ONE_RF, I_RF]
    return v1, v2


def _scale(c, v):
    c = rf(c)
    return [c * x for x in v]


def _add(u, v):
    return [a + b for a, b in zip(u, v)]


def _nonconstant(h) -> bool:
    return not rf(h).derivative().is_zero()


def s6_case_builder(case: int, **f) -> NormalizedPotential:
    """The three S^6 normal forms (m = 4).

    case 1: h13t, h33t, h20, h30, h40
    case 2: h1, h2, h10, h30hat, h40hat
    case 3: h1, h2, h10, h30, h40
    """
    g = {k: rf(v) for k, v in f.items()}
    if case == 1:
        h13, h33 = g.get("h13t", ZERO_RF), g.get("h33t", ZERO_RF)
        if not _nonconstant(h33):
            raise DegenerateInput("case 1 needs h33t non-constant")
        v1 = [h13, h13, h33, I_RF * h33]
        cols = [v1, _scale(g.get("h20", ZERO_RF), v1), _scale(g.get("h30", ZERO_RF), v1), _scale(g.get("h40", ZERO_RF), v1)]
        pairs = [pair_i_from_vectors(cols[0], cols[1]), pair_i_from_vectors(cols[2], cols[3])]
        return assemble(pairs, 4, "s6_case1")
    h1, h2, h10 = g.get("h1", ZERO_RF), g.get("h2", ZERO_RF), g.get("h10", ONE_RF)
    v1, v2 = isotropic_pair_from_functions(h1, h2)
    if case == 2:
        a, b = g.get("h30hat", ZERO_RF), g.get("h40hat", ZERO_RF)
        if not (_nonconstant(h1) or _nonconstant(h2)):
            raise DegenerateInput("case 2 needs h1 or h2 non-constant")
        if (a * a + b * b).is_zero():
            raise DegenerateInput(
                "case 2 needs h30hat^2 + h40hat^2 != 0; otherwise the Hopf differential is isotropic (case 3)"
            )
        if h10.is_zero():
            raise DegenerateInput("case 2 needs h10 != 0")
        pairs = [pair_ii_from_vector(_scale(h10, v1)), pair_i_from_vectors(_scale(a, v2), _scale(b, v2))]
        return assemble(pairs, 4, "s6_case2")
    if case == 3:
        h30, h40 = g.get("h30", ZERO_RF), g.get("h40", ZERO_RF)
        if not _nonconstant(h1):
            raise DegenerateInput("case 3 needs h1 non-constant")
        if h30.is_zero() and h40.is_zero():
            raise DegenerateInput("case 3 needs h30 or h40 non-zero")
        if h10.is_zero():
            raise DegenerateInput("case 3 needs h10 != 0")
        w = _add(_scale(h30, v1), _scale(h40, v2))
        pairs = [pair_ii_from_vector(_scale(h10, v1)), pair_ii_from_vector(w)]
        return assemble(pairs, 4, "s6_case3")
    raise PotentialError(f"unknown S^6 case {case}")


def s5_builder(h0, h1, h2, h0hat) -> NormalizedPotential:
    """Non-S-Willmore spheres in S^5: fourth column identically zero."""
    h0, h1, h2, h0hat = map(rf, (h0, h1, h2, h0hat))
    for name, h in (("h0", h0), ("h1", h1), ("h2", h2), ("h0hat", h0hat)):
        if not _nonconstant(h):
            raise DegenerateInput(f"S^5 builder needs {name} non-constant")
    v1, v2 = isotropic_pair_from_functions(h1, h2)
    pairs = [pair_ii_from_vector(_scale(h0, v1)), pair_i_from_vectors(_scale(h0hat, v2), [ZERO_RF] * 4)]
    p = assemble(pairs, 4, "s5")
    if generic_rank(p) != 2:
        raise DegenerateInput("S^5 potential degenerates to rank <= 1")
    return p


def s4_minimal_builder(h10, h20, h1, h2) -> NormalizedPotential:
    """m = 3, S-Willmore minimal case: (h10 v, h20 v) with v = (h1, h1, h2, i h2)."""
    h10, h20, h1, h2 = map(rf, (h10, h20, h1, h2))
    if h1.is_zero() and h2.is_zero():
        raise DegenerateInput("S^4 minimal case needs h1 or h2 non-zero")
    v = [h1, h1, h2, I_RF * h2]
    return assemble([pair_i_from_vectors(_scale(h10, v), _scale(h20, v))], 3, "s4_minimal")


def s4_isotropic_builder(h10, h1, h2) -> NormalizedPotential:
    v1, _ = isotropic_pair_from_functions(h1, h2)
    if rf(h10).is_zero():
        raise DegenerateInput("S^4 isotropic case needs h10 != 0")
    return assemble([pair_ii_from_vector(_scale(h10, v1))], 3, "s4_isotropic")


def example_potential() -> NormalizedPotential:
    """The explicit full, non-S-Willmore, totally isotropic example in S^6,
    realized as S^6 case 3 with h1 = i/z, h2 = 0, h10 = iz, h30 = 0, h40 = -z/2."""
    p = s6_case_builder(3, h1=I_RF / Z_RF, h2=ZERO_RF, h10=I_RF * Z_RF, h30=ZERO_RF, h40=Z_RF * RationalFunction.const("-1/2"))
    return NormalizedPotential(p.m, p.pairs, "example", p.poles)


def example_B1() -> list[list[RationalFunction]]:
    """The tabulated matrix, entry by entry."""
    z, i = Z_RF, I_RF
    half = RationalFunction.const("1/2")
    rows = [
        [2 * i * z, -2 * z, -i, ONE_RF],
        [-2 * i * z, 2 * z, -i, ONE_RF],
        [-2 * ONE_RF, -2 * i, -z, -i * z],
        [2 * i, -2 * ONE_RF, -i * z, z],
    ]
    return [[half * x for x in row] for row in rows]


def trichotomy_builder(case: int, m: int, l: int | None = None, **f) -> NormalizedPotential:
    """General-m normal forms.

    case 1: all pairs kind i (functions h1_j, h1hat_j, h3_j, h3hat_j).
    case 2: pairs 3..l are v_j = -i vhat_j = h_j0 v1 + ht_j0 v2 (kind ii),
            pairs l+1..m are (ht_j0 v2, hhat_j0 v2) (kind i).
    case 3: every pair is kind ii in span(v1, v2).
    """
    g = {k: rf(v) for k, v in f.items()}
    get = lambda k: g.get(k, ZERO_RF)
    if case == 1:
        pairs = [pair_i(get(f"h1_{j}"), get(f"h1hat_{j}"), get(f"h3_{j}"), get(f"h3hat_{j}")) for j in range(3, m + 1)]
        return assemble(pairs, m, "general_case1")
    v1, v2 = isotropic_pair_from_functions(get("h1"), get("h2"))
    top = m if case == 3 else l
    if case == 2 and (l is None or not 3 <= l < m):
        raise PotentialError("case 2 needs 3 <= l < m")
    if case not in (2, 3):
        raise PotentialError(f"unknown case {case}")
    pairs = []
    for j in range(3, m + 1):
        if j <= top:
            pairs.append(pair_ii_from_vector(_add(_scale(get(f"h{j}0"), v1), _scale(get(f"ht{j}0"), v2))))
        else:
            pairs.append(pair_i_from_vectors(_scale(get(f"ht{j}0"), v2), _scale(get(f"hhat{j}0"), v2)))
    return assemble(pairs, m, f"general_case{case}")


# ----- randomized generation ----------------------------------------------

def random_rational(rng: random.Random, max_deg: int = 2, allow_pole: bool = True) -> RationalFunction:
    num = [[rng.randint(-3, 3), rng.randint(-3, 3)] for _ in range(rng.randint(1, max_deg + 1))]
    if all(a == 0 and b == 0 for a, b in num):
        num[-1] = [1, 0]
    den = [1]
    if allow_pole and rng.random() < 0.3:
        den = [[rng.randint(-3, 3), rng.randint(-2, 2)], 1]
    return RationalFunction.from_coeffs(num, den)


def random_potential(m: int, type_tag: int, rng: random.Random) -> NormalizedPotential:
    """Random potential of the requested type: type - 1 kind-ii pairs placed
    at random positions, drawn from the general normal forms."""
    if not 1 <= type_tag <= m - 1:
        raise PotentialError(f"type must lie in 1..{m - 1}")
    n_ii = type_tag - 1
    r = lambda: random_rational(rng)
    if n_ii == 0:
        pairs = [pair_i(r(), r(), r(), r()) for _ in range(m - 2)]
    else:
        h1, h2 = r(), r()
        v1, v2 = isotropic_pair_from_functions(h1, h2)
        positions = set(rng.sample(range(m - 2), n_ii))
        pairs = []
        for k in range(m - 2):
            if k in positions:
                w = _add(_scale(r(), v1), _scale(r(), v2)) if n_ii == m - 2 else _scale(r(), v2)
                pairs.append(pair_ii_from_vector(w))
            else:
                pairs.append(pair_i_from_vectors(_scale(r(), v2), _scale(r(), v2)))
    return assemble(pairs, m, f"random_type{type_tag}")


def corrupt(p: NormalizedPotential, pair_index: int, name: str, delta) -> list[ColumnPair]:
    """Pairs of ``p`` with one generating function shifted by ``delta``."""
    pairs = list(p.pairs)
    target = pairs[pair_index]
    funcs = dict(target.functions)
    funcs[name] = funcs[name] + rf(delta)
    pairs[pair_index] = ColumnPair(target.kind, funcs)
    return pairs


# ----- named builders for JSON/CLI -----------------------------------------

def _decode_functions(d: dict, names: Sequence[str]) -> dict:
    out = {}
    for n in names:
        if n in d:
            v = d[n]
            out[n] = RationalFunction.from_json(v) if isinstance(v, dict) else rf(v)
    return out


def build_named(d: dict) -> NormalizedPotential:
    b = d["builder"]
    if b == "example":
        return example_potential()
    if b in ("s6_case1", "s6_case2", "s6_case3"):
        names = {
            "s6_case1": ("h13t", "h33t", "h20", "h30", "h40"),
            "s6_case2": ("h1", "h2", "h10", "h30hat", "h40hat"),
            "s6_case3": ("h1", "h2", "h10", "h30", "h40"),
        }[b]
        return s6_case_builder(int(b[-1]), **_decode_functions(d, names))
    if b == "s5":
        f = _decode_functions(d, ("h0", "h1", "h2", "h0hat"))
        return s5_builder(f.get("h0", ZERO_RF), f.get("h1", ZERO_RF), f.get("h2", ZERO_RF), f.get("h0hat", ZERO_RF))
    if b == "s4_minimal":
        f = _decode_functions(d, ("h10", "h20", "h1", "h2"))
        return s4_minimal_builder(*(f.get(k, ZERO_RF) for k in ("h10", "h20", "h1", "h2")))
    if b == "s4_isotropic":
        f = _decode_functions(d, ("h10", "h1", "h2"))
        return s4_isotropic_builder(*(f.get(k, ZERO_RF) for k in ("h10", "h1", "h2")))
    raise PotentialError(f"unknown builder {b!r}")


# ----- torus period diagnostic ---------------------------------------------

@dataclass(frozen=True)
class TorusReport:
    periods: dict  # name -> (along omega1, along omega2)

    @property
    def max_residual(self) -> float:
        return max(abs(v) for pair in self.periods.values() for v in pair)

    def ok(self, tol: float = 1e-8) -> bool:
        return self.max_residual <= tol


def _as_callable(h) -> Callable:
    if isinstance(h, RationalFunction):
        return h
    if callable(h):
        return np.vectorize(lambda t: complex(h(t)), otypes=[complex])
    c = complex(h)
    return lambda t: np.full(np.shape(t), c, dtype=complex)


def torus_integral_check(h0, h1, h2, omega1: complex, omega2: complex, base: complex = 0j, deg: int = 96) -> TorusReport:
    """Increments of the six primitives along the straight paths
    base -> base + omega_k.

    Primitives are built by Chebyshev interpolation and spectral cumulative
    integration along each path, so iterated integrals share one
    discretization.  A zero increment on both generators is the
    single-valuedness condition.
    """
    f0, f1, f2 = (_as_callable(h) for h in (h0, h1, h2))
    cheb = np.polynomial.chebyshev
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))  # Chebyshev points on [-1, 1]
    out: dict[str, list[complex]] = {k: [] for k in ("h1", "h2", "h10", "h20", "h31", "h32")}
    for omega in (omega1, omega2):
        t = (nodes + 1) / 2
        z = base + omega * t
        v0, v1, v2 = (np.asarray(f(z), dtype=complex) for f in (f0, f1, f2))

        def primitive(vals):
            # dz = omega dt, t = (s+1)/2: d/ds = omega/2 d/dz
            coef = cheb.chebfit(nodes, vals * omega / 2, deg)
            ic = cheb.chebint(coef, lbnd=-1)
            return cheb.chebval(nodes, ic), cheb.chebval(1.0, ic)

        P1, p1 = primitive(v1)
        P2, p2 = primitive(v2)
        P10, p10 = primitive(v1 * v0)
        P20, p20 = primitive(v2 * v0)
        _, p31 = primitive(-P10 * v2 + P1 * v2 * v0)
        _, p32 = primitive(-P2 * v1 * v0 + P20 * v1)
        for k, v in zip(out, (p1, p2, p10, p20, p31, p32)):
            out[k].append(complex(v))
    return TorusReport({k: tuple(v) for k, v in out.items()})


def jacobi_torus(hhat1: Callable, hhat1_prime: Callable, hhat2_prime: Callable):
    """h1 = h2 = hhat1', h0 = hhat2'/hhat1'."""
    return (lambda z: hhat2_prime(z) / hhat1_prime(z)), hhat1_prime, hhat1_prime
