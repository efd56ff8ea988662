import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wll.rational import I_RF, ONE_RF, Z_RF, RationalFunction, det, generic_rank_of, parse_scalar, rf

small = st.integers(-4, 4)
coeffs = st.lists(st.tuples(small, small), min_size=1, max_size=4)


def make(num, den):
    den = list(den) + [(1, 0)]  # monic, never zero
    return RationalFunction.from_coeffs([list(c) for c in num], [list(c) for c in den])


def test_parse_scalar_forms():
    assert parse_scalar("3/4") == parse_scalar(Fraction(3, 4))
    assert parse_scalar([1, "-1/2"]) == parse_scalar(complex(1, 0)) + parse_scalar([0, "-1/2"])
    assert parse_scalar(2.0) == parse_scalar(2)
    with pytest.raises(ValueError):
        parse_scalar(0.1)
    with pytest.raises(ValueError):
        parse_scalar([1, 2, 3])


def test_reduction_and_normal_form():
    f = (Z_RF * Z_RF - 1) / (Z_RF - 1)
    assert f == Z_RF + 1
    assert f.den.degree() == 0
    g = (2 * ONE_RF) / (2 * Z_RF + 4)
    assert g.den == (Z_RF + 2).num and g == ONE_RF / (Z_RF + 2)
    with pytest.raises(ZeroDivisionError):
        ONE_RF / (Z_RF - Z_RF)


@settings(max_examples=40, deadline=None)
@given(coeffs, coeffs, coeffs, coeffs)
def test_field_axioms(n1, d1, n2, d2):
    f, g = make(n1, d1), make(n2, d2)
    assert f + g == g + f
    assert f * g == g * f
    assert (f + g) - g == f
    if g:
        assert (f / g) * g == f
    assert (f * g).derivative() == f.derivative() * g + f * g.derivative()


@settings(max_examples=25, deadline=None)
@given(coeffs, coeffs)
def test_numeric_evaluation_agrees_with_exact(n, d):
    f = make(n, d)
    for z0 in ([1, 2], ["1/3", -1], [0, 0]):
        try:
            exact = f.at(z0)
        except ZeroDivisionError:
            continue
        zc = complex(Fraction(z0[0]) if isinstance(z0[0], str) else z0[0], z0[1])
        assert complex(float(exact.x), float(exact.y)) == pytest.approx(f(zc), rel=1e-9, abs=1e-9)


def test_json_roundtrip():
    f = (I_RF * Z_RF**2 + RationalFunction.const("1/3")) / (Z_RF - I_RF)
    d = json.loads(json.dumps(f.to_json()))
    assert RationalFunction.from_json(d) == f
    with pytest.raises(ValueError):
        RationalFunction.from_json({"den": [1]})


def test_poles_and_degree():
    f = ONE_RF / ((Z_RF - 2) * (Z_RF + I_RF))
    assert sorted(np.round(f.poles(), 12), key=lambda c: c.real) == pytest.approx([-1j, 2])
    assert f.degree() == (0, 2)
    assert rf(3).is_constant() and not Z_RF.is_constant()


def test_determinant_and_rank():
    m = [[Z_RF, ONE_RF], [Z_RF * Z_RF, Z_RF]]
    assert det(m).is_zero()
    assert generic_rank_of(m) == 1
    assert generic_rank_of([[Z_RF, ONE_RF], [ONE_RF, Z_RF]]) == 2
