import json
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wll.potentials import (
    DegenerateInput,
    IsotropyError,
    PotentialError,
    assemble,
    corrupt,
    example_B1,
    example_potential,
    generic_rank,
    is_s_willmore,
    isotropic_pair_from_functions,
    jacobi_torus,
    lorentz4,
    pair_i,
    pair_ii,
    potential_from_json,
    random_potential,
    s4_isotropic_builder,
    s4_minimal_builder,
    s5_builder,
    s6_case_builder,
    torus_integral_check,
    trichotomy_builder,
)
from wll.rational import I_RF, ONE_RF, Z_RF, ZERO_RF

z, i, one = Z_RF, I_RF, ONE_RF


def test_example_reproduces_tabulated_matrix():
    p = example_potential()
    assert p.B1 == example_B1()
    assert p.type_tag == 3
    assert generic_rank(p) == 2 and not is_s_willmore(p)


def test_isotropic_pair_is_isotropic():
    v1, v2 = isotropic_pair_from_functions(z, one / (z + 1))
    for a in (v1, v2):
        for b in (v1, v2):
            assert lorentz4(a, b).is_zero()


@pytest.mark.parametrize(
    "build, rank",
    [
        (lambda: s6_case_builder(1, h13t=z, h33t=z * z, h20=z, h30=one, h40=z), 1),
        (lambda: s6_case_builder(2, h1=z, h2=one, h10=one, h30hat=z, h40hat=one), 2),
        (lambda: s6_case_builder(3, h1=z, h2=ZERO_RF, h10=one, h30=one, h40=z), 2),
        (lambda: s5_builder(z, z * z, one + z, z * z * z), 2),
        (lambda: s4_minimal_builder(z, one, z * z, one), 1),
        (lambda: s4_isotropic_builder(z, z, one), 1),
    ],
)
def test_builders_are_isotropic(build, rank):
    p = build()
    assert generic_rank(p) == rank
    assert all(x.is_zero() for row in _gram(p) for x in row)


def _gram(p):
    cols = p.columns()
    return [[lorentz4(a, b) for b in cols] for a in cols]


def test_degenerate_inputs_rejected():
    with pytest.raises(DegenerateInput):
        s6_case_builder(2, h1=z, h2=one, h10=one, h30hat=i, h40hat=one)  # h30^2 + h40^2 = 0
    with pytest.raises(DegenerateInput):
        s6_case_builder(3, h1=one, h10=one, h30=one)
    with pytest.raises(DegenerateInput):
        s5_builder(one, z, z, z)
    with pytest.raises(PotentialError):
        s6_case_builder(4)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 5), st.integers(0, 10**6), st.data())
def test_random_potentials_pass(m, seed, data):
    t = data.draw(st.integers(1, m - 1))
    p = random_potential(m, t, random.Random(seed))
    assert p.type_tag == t and p.m == m


def test_random_type_out_of_range():
    with pytest.raises(PotentialError):
        random_potential(4, 4, random.Random(0))


def test_corruption_names_the_pair():
    p = example_potential()
    with pytest.raises(IsotropyError) as info:
        assemble(corrupt(p, 1, "h4", 1), 4)
    assert 4 in info.value.pairs
    assert "pair" in str(info.value) or "column" in str(info.value)


def test_kind_i_shape_enforced():
    with pytest.raises(PotentialError):
        assemble([pair_i(z, one, one, z), pair_ii(z, z, one, one)], 4)
    with pytest.raises(PotentialError):
        assemble([pair_i(z, one, one, z)], 4)


def test_json_roundtrip_and_builders():
    p = example_potential()
    q = potential_from_json(json.loads(json.dumps(p.to_json())))
    assert q.B1 == p.B1
    r = potential_from_json({"builder": "s6_case3", "h1": {"num": [[0, 0], [1, 0]]}, "h30": {"num": [[1, 0]]}})
    assert r.m == 4
    with pytest.raises(PotentialError):
        potential_from_json({"pairs": 3})


def test_trichotomy_matches_s6_case3():
    p = trichotomy_builder(3, 4, h1=z, h2=ZERO_RF)
    assert p.type_tag == 3


def test_numeric_b1():
    p = example_potential()
    zs = np.array([0.3 + 0.1j, -1.0])
    b = p.B1_numeric(zs)
    I13 = np.diag([-1.0, 1, 1, 1])
    assert np.abs(np.swapaxes(b, -1, -2) @ I13 @ b).max() < 1e-14


@pytest.fixture(scope="module")
def jacobi():
    k2 = 0.5
    K = float(mpmath.ellipk(k2))
    Kp = float(mpmath.ellipk(1 - k2))
    sn = np.vectorize(lambda u: complex(mpmath.ellipfun("sn", u, m=k2)), otypes=[complex])
    cn = np.vectorize(lambda u: complex(mpmath.ellipfun("cn", u, m=k2)), otypes=[complex])
    dn = np.vectorize(lambda u: complex(mpmath.ellipfun("dn", u, m=k2)), otypes=[complex])
    return K, Kp, sn, cn, dn


def test_torus_periods_vanish_for_compatible_data(jacobi):
    K, Kp, sn, cn, dn = jacobi
    d1 = lambda u: cn(u) * dn(u)
    h0, h1, h2 = jacobi_torus(sn, d1, lambda u: 2 * sn(u) * d1(u))
    rep = torus_integral_check(h0, h1, h2, 4 * K, 2j * Kp, base=K / 2 + 0.3j)
    assert rep.ok(1e-10)


def test_torus_periods_detect_multivalued_data(jacobi):
    K, Kp, sn, cn, dn = jacobi
    rep = torus_integral_check(lambda u: sn(u), lambda u: cn(u), lambda u: dn(u), 4 * K, 2j * Kp, base=K / 2 + 0.3j)
    assert not rep.ok(1e-6)
    # nonzero constants have nonzero periods
    assert not torus_integral_check(1, 1, 1, 4 * K, 2j * Kp).ok()
    assert torus_integral_check(0, 0, 0, 4 * K, 2j * Kp).ok()
