import pytest

from wll.canonical import (
    FAMILIES,
    CanonicalElement,
    TemplateMismatch,
    brute_force_canonical,
    enumerate_canonical,
    exp_pi_check,
    match_template,
    nilpotent_basis,
    positive_part_closed,
    positive_part_nilpotent,
)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_enumeration_matches_brute_force(m):
    els = enumerate_canonical(m)
    assert len(els) == (m - 1) ** 2
    assert {e.coeffs for e in els} == set(map(tuple, brute_force_canonical(m)))
    assert len({e.label for e in els}) == len(els)


def test_enumeration_guards():
    with pytest.raises(ValueError):
        enumerate_canonical(2)
    with pytest.raises(ValueError):
        brute_force_canonical(11)
    with pytest.raises(ValueError):
        CanonicalElement(3, (1, 1), "A")
    with pytest.raises(ValueError):
        CanonicalElement(3, (1, 1, 0), "Z")


@pytest.mark.parametrize("m", [4, 5])
def test_families_present(m):
    tags = {e.family_tag for e in enumerate_canonical(m)}
    assert tags <= set(FAMILIES)
    assert {"A", "B", "C", "C'", "E", "F", "F'", "G", "G'"} <= tags


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_exp_pi(m):
    assert all(exp_pi_check(el) for el in enumerate_canonical(m))


@pytest.mark.parametrize("m", [3, 4, pytest.param(5, marks=pytest.mark.slow)])
def test_positive_part_is_a_nilpotent_subalgebra(m):
    for el in enumerate_canonical(m):
        assert positive_part_closed(el), el.label
        assert positive_part_nilpotent(el), el.label


def test_exp_pi_rejects_wrong_parity():
    assert not exp_pi_check((2, 0, 0, 0))
    assert exp_pi_check((1, 1, 0, 0))


def test_height_values_m4():
    h = {e.label: e.height for e in enumerate_canonical(4)}
    assert h["A"] == 2 and h["E"] == 2
    assert h["F"] == h["F'"] == 3
    assert h["C_3"] == h["C'_3"] == 5


def test_templates_m4_all_match():
    for el in enumerate_canonical(4):
        t = match_template(el)
        assert t.ok, el.label
        if el.family_tag in ("A", "E", "F", "F'", "G", "G'"):
            assert t.status == "literal"


def test_reference_d_template_fails_and_corrected_one_matches():
    d = next(e for e in enumerate_canonical(5) if e.family_tag == "D")
    assert match_template(d).status == "none"
    assert match_template(d, corrected=True).status == "literal"
    with pytest.raises(TemplateMismatch):
        nilpotent_basis(d, corrected=False)
    nb = nilpotent_basis(d)
    assert nb.dimension == len(d.grading.odd_positive_part())
