"""Canonical elements of the twisting involution diag(-I4, I_{2m-4}) and
their odd nilpotent parts."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .lie_algebra import (
    GradedDecomposition,
    LieMatrix,
    TorusElement,
    basis_element,
    bracket,
    grade,
    same_span,
)

FAMILIES = ("A", "B", "C", "C'", "D", "D'", "E", "F", "F'", "G", "G'")


class TemplateMismatch(RuntimeError):
    """Computed odd part disagrees with the tabulated span."""


@dataclass(frozen=True)
class CanonicalElement:
    m: int
    coeffs: tuple[int, ...]
    family_tag: str
    params: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.coeffs) != self.m:
            raise ValueError("coefficient vector must have length m")
        if self.family_tag not in FAMILIES:
            raise ValueError(f"unknown family {self.family_tag!r}")

    @property
    def torus(self) -> TorusElement:
        return TorusElement(self.coeffs)

    @cached_property
    def grading(self) -> GradedDecomposition:
        return grade(self.torus)

    @property
    def height(self) -> int:
        return self.grading.height

    @property
    def label(self) -> str:
        if not self.params:
            return self.family_tag
        return self.family_tag + "_" + ",".join(map(str, self.params))


def _vec(m: int, head: tuple[int, int], runs: list[tuple[int, int, int]]) -> tuple[int, ...]:
    """head = (n1, n2); runs of (value, first, last) over 1-based indices >= 3."""
    v = [0] * m
    v[0], v[1] = head
    for value, lo, hi in runs:
        for j in range(lo, hi + 1):
            v[j - 1] = value
    return tuple(v)


def enumerate_canonical(m: int) -> list[CanonicalElement]:
    """The (m-1)^2 canonical elements in family order."""
    if m < 3:
        raise ValueError(f"need m >= 3, got {m}")
    out = [CanonicalElement(m, _vec(m, (1, 1), []), "A")]
    for l in range(3, m):
        out.append(CanonicalElement(m, _vec(m, (1, 1), [(2, 3, l)]), "B", (l,)))
    for l in range(3, m):
        out.append(CanonicalElement(m, _vec(m, (3, 1), [(2, 3, l)]), "C", (l,)))
        out.append(CanonicalElement(m, _vec(m, (1, 3), [(2, 3, l)]), "C'", (l,)))
    for l in range(3, m):
        for t in range(l + 1, m):
            out.append(CanonicalElement(m, _vec(m, (3, 1), [(4, 3, l), (2, l + 1, t)]), "D", (l, t)))
            out.append(CanonicalElement(m, _vec(m, (1, 3), [(4, 3, l), (2, l + 1, t)]), "D'", (l, t)))
    out.append(CanonicalElement(m, _vec(m, (0, 0), [(1, 3, m)]), "E"))
    out.append(CanonicalElement(m, _vec(m, (2, 0), [(1, 3, m)]), "F"))
    out.append(CanonicalElement(m, _vec(m, (0, 2), [(1, 3, m)]), "F'"))
    for k in range(3, m):
        out.append(CanonicalElement(m, _vec(m, (2, 0), [(3, 3, k), (1, k + 1, m)]), "G", (k,)))
        out.append(CanonicalElement(m, _vec(m, (0, 2), [(3, 3, k), (1, k + 1, m)]), "G'", (k,)))
    return out


def _conditions_hold(sorted_tuple: tuple[int, ...], m: int) -> bool:
    if sorted_tuple[-1] != 0 or sorted_tuple[0] > max(m - 1, 4):
        return False
    if any(not 0 <= a - b <= 1 for a, b in zip(sorted_tuple, sorted_tuple[1:])):
        return False
    odd = sum(v % 2 for v in sorted_tuple)
    return odd == 2 or m - odd == 2


def brute_force_canonical(m: int) -> list[tuple[int, ...]]:
    """Exhaustive filter of the canonicity conditions, arranged in the torus
    convention: the two entries of the minority parity sit on xi_1, xi_2 (both
    orders), the rest non-increasing on xi_3..xi_m."""
    if not 3 <= m <= 10:
        raise ValueError(f"m={m} outside the search guard 3..10")
    top = max(m - 1, 4)
    found: set[tuple[int, ...]] = set()
    for tup in itertools.product(range(top + 1), repeat=m):
        if list(tup) != sorted(tup, reverse=True) or not _conditions_hold(tup, m):
            continue
        for parity in (0, 1):
            pair = [v for v in tup if v % 2 == parity]
            if len(pair) != 2:
                continue
            rest = sorted((v for v in tup if v % 2 != parity), reverse=True)
            for a, b in ((pair[0], pair[1]), (pair[1], pair[0])):
                found.add((a, b, *rest))
    return sorted(found, reverse=True)


# ----- tabulated odd parts ------------------------------------------------

def _span(m: int, items: list[tuple[str, int, int]]) -> list[LieMatrix]:
    return [basis_element(k, r, j, m) for k, r, j in items]


def _run(kind: str, r: int, lo: int, hi: int) -> list[tuple[str, int, int]]:
    return [(kind, r, j) for j in range(lo, hi + 1)]


def template_span(el: CanonicalElement, corrected: bool = False) -> list[LieMatrix]:
    """Odd nilpotent span as tabulated, family by family.

    The tabulated d/e spans do not depend on t and coincide with the g/h
    spans.  ``corrected=True`` uses the span read off from the roots
    instead: F_{2,3..t}, H_{2,t+1..m} in the second row.
    """
    m, tag = el.m, el.family_tag
    e_all = _run("E", 1, 3, m) + _run("E", 2, 3, m)
    if tag == "A":
        items = e_all + _run("H", 1, 3, m) + _run("H", 2, 3, m)
    elif tag == "B":
        (l,) = el.params
        items = e_all + [x for r in (1, 2) for x in _run("H", r, 3, l) + _run("F", r, l + 1, m)]
    elif tag in ("C", "C'"):
        (l,) = el.params
        a, b = (1, 2) if tag == "C" else (2, 1)
        items = e_all + _run("H", a, 3, m) + _run("H", b, 3, l) + _run("F", b, l + 1, m)
    elif tag in ("D", "D'"):
        # the tabulated d/e spans carry only l, not t
        l, t = el.params
        a, b = (1, 2) if tag == "D" else (2, 1)
        items = e_all + _run("H", a, l + 1, m) + _run("F", a, 3, l)
        if corrected:
            items += _run("F", b, 3, t) + _run("H", b, t + 1, m)
        else:
            items += _run("F", b, 3, m)
    elif tag == "E":
        items = e_all + _run("F", 1, 3, m) + _run("F", 2, 3, m)
    elif tag in ("F", "F'"):
        a, b = (1, 2) if tag == "F" else (2, 1)
        items = e_all + _run("H", a, 3, m) + _run("F", b, 3, m)
    else:  # G, G'
        (l,) = el.params
        a, b = (1, 2) if tag == "G" else (2, 1)
        items = e_all + _run("H", a, l + 1, m) + _run("F", a, 3, l) + _run("F", b, 3, m)
    return _span(m, items)


@dataclass(frozen=True)
class TemplateMatch:
    """How a tabulated span is realized: by which element of the same family
    and after which relabelling of xi_3..xi_m (0-based slots)."""

    status: str  # "literal", "conjugate" or "none"
    element: str = ""
    permutation: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status != "none"


@dataclass(frozen=True)
class NilpotentBasis:
    canonical: CanonicalElement
    odd_part_basis: list[LieMatrix] = field(repr=False)
    match: TemplateMatch

    @property
    def dimension(self) -> int:
        return len(self.odd_part_basis)


def _permuted(coeffs: tuple[int, ...], perm: tuple[int, ...]) -> TorusElement:
    return TorusElement(tuple(coeffs[:2]) + tuple(coeffs[p] for p in perm))


def match_template(el: CanonicalElement, corrected: bool = False) -> TemplateMatch:
    """Compare the tabulated span of ``el`` with computed odd parts.

    First literally against ``el`` itself; failing that, against every
    element of the same family after relabelling xi_3..xi_m, which is
    conjugation by a block permutation in SO(2m-4).
    """
    tmpl = template_span(el, corrected)
    if same_span(el.grading.odd_positive_part(), tmpl):
        return TemplateMatch("literal", el.label, tuple(range(2, el.m)))
    rivals = [e for e in enumerate_canonical(el.m) if e.family_tag == el.family_tag]
    for other in rivals:
        for perm in itertools.permutations(range(2, el.m)):
            odd = grade(_permuted(other.coeffs, perm)).odd_positive_part()
            if same_span(odd, tmpl):
                return TemplateMatch("conjugate", other.label, perm)
    return TemplateMatch("none")


def nilpotent_basis(el: CanonicalElement, strict: bool = True, corrected: bool = True) -> NilpotentBasis:
    """Odd positive part of the grading, checked against the tabulated span."""
    odd = el.grading.odd_positive_part()
    match = match_template(el, corrected)
    if strict and not match.ok:
        raise TemplateMismatch(f"{el.label} (m={el.m}): odd part does not match the tabulated span")
    return NilpotentBasis(el, odd, match)


def positive_part_closed(el: CanonicalElement) -> bool:
    """Bracket-closure of the full positive part, checked exactly by grade."""
    g = el.grading
    for a, va in g.spaces.items():
        for b, vb in g.spaces.items():
            if a <= 0 or b <= 0:
                continue
            target = g.spaces.get(a + b, [])
            for x in va:
                for y in vb:
                    z = bracket(x, y)
                    if z.is_zero():
                        continue
                    if not target or not same_span(target, target + [z]):
                        return False
    return True


def positive_part_nilpotent(el: CanonicalElement) -> bool:
    """X^(2r+1) = 0 for every basis matrix of the positive part."""
    power = 2 * el.height + 1
    for x in el.grading.positive_part():
        a = x.to_numpy()
        p = np.linalg.matrix_power(a, power)
        if np.max(np.abs(p)) > 0:
            return False
    return True


def exp_pi_eigenvalues(coeffs) -> list[int]:
    """Eigenvalues of exp(pi xi): each torus block contributes (-1)^{n_r} twice.

    Block 1 is exp(pi * i n [[0,1],[1,0]]) = cosh-type with eigenvalues
    exp(+-i pi n); the rotation blocks give exp(+-i pi n) as well.
    """
    out = []
    for n in coeffs:
        if int(n) != n:
            raise ValueError("exp_pi_check needs integer coefficients")
        out += [(-1) ** (int(n) % 2)] * 2
    return out


def exp_pi_matrix(coeffs) -> np.ndarray:
    m = len(coeffs)
    out = np.zeros((2 * m, 2 * m), dtype=complex)
    for r, n in enumerate(coeffs):
        t = np.pi * n
        blk = np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]], dtype=complex)
        if r == 0:
            blk = np.array([[np.cos(t), 1j * np.sin(t)], [1j * np.sin(t), np.cos(t)]])
        out[2 * r:2 * r + 2, 2 * r:2 * r + 2] = blk
    return out


def exp_pi_check(el) -> bool:
    """True iff exp(pi xi) has the spectrum of D or -D."""
    coeffs = el.coeffs if isinstance(el, CanonicalElement) else tuple(el)
    m = len(coeffs)
    ev = sorted(exp_pi_eigenvalues(coeffs))
    d = sorted([-1] * 4 + [1] * (2 * m - 4))
    minus_d = sorted([1] * 4 + [-1] * (2 * m - 4))
    return ev == d or ev == minus_d
