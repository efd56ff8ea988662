import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wll.jets import Jet, fit_jet, lorentz_dot


def wirtinger(g, z, h=1e-5):
    dx = (g(z + h) - g(z - h)) / (2 * h)
    dy = (g(z + 1j * h) - g(z - 1j * h)) / (2 * h)
    return (dx - 1j * dy) / 2, (dx + 1j * dy) / 2


points = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


@settings(max_examples=30, deadline=None)
@given(points)
def test_first_derivatives_match_finite_differences(z0):
    z, zb = Jet.variables(z0, 4)
    f = (z * zb + 2).sqrt() / (1 + z * z * zb * zb) + (z * 0.5j).exp()
    g = lambda w: np.sqrt(abs(w) ** 2 + 2) / (1 + abs(w) ** 4) + np.exp(0.5j * w)
    fz, fzb = wirtinger(g, complex(z0))
    assert f.value[()] == pytest.approx(g(complex(z0)), rel=1e-12, abs=1e-12)
    assert f.derivative(1, 0)[()] == pytest.approx(fz, rel=1e-6, abs=1e-8)
    assert f.derivative(0, 1)[()] == pytest.approx(fzb, rel=1e-6, abs=1e-8)


def test_polynomial_coefficients_are_exact():
    z, zb = Jet.variables(0.3 - 0.1j, 6)
    f = z**3 * zb**2
    z0 = 0.3 - 0.1j
    assert f.derivative(3, 2) == pytest.approx(12)
    assert f.derivative(2, 1) == pytest.approx(12 * z0 * np.conj(z0))
    assert f.derivative(4, 0) == 0
    # d/dz then d/dzb equals the mixed coefficient
    assert f.dz().dzb().value == pytest.approx(f.derivative(1, 1))


def test_conjugate_jet_and_real_part():
    z, zb = Jet.variables(np.array([0.2 + 0.7j]), 4)
    f = z * z * zb + 1j * zb
    fc = f.conj()
    assert np.allclose(fc.value, np.conj(f.value))
    assert np.allclose(fc.derivative(1, 0), np.conj(f.derivative(0, 1)))
    assert np.allclose(f.real.value.imag, 0)


def test_reciprocal_and_power_identities():
    z, zb = Jet.variables(np.array([0.5, -1 + 0.5j]), 5)
    f = 1 + z * zb + z * z
    assert np.allclose((f * f.reciprocal()).c[..., 0, 0], 1)
    assert np.allclose((f * f.reciprocal() - 1).c, 0, atol=1e-12)
    assert np.allclose((f.sqrt() * f.sqrt() - f).c, 0, atol=1e-12)
    assert np.allclose((f.power(-0.5) * f.power(0.5) - 1).c, 0, atol=1e-12)
    with pytest.raises(ZeroDivisionError):
        (z - z).reciprocal()


def test_order_bookkeeping():
    z, _ = Jet.variables(0.0, 2)
    assert z.dz().dz().order == 0
    with pytest.raises(ValueError):
        z.dz().dz().dz()
    with pytest.raises(ValueError):
        z.derivative(2, 1)


def test_lorentz_dot_on_vectors():
    z, zb = Jet.variables(np.zeros(3), 3)
    v = Jet.stack([1 + 0 * z, z, zb], -1)
    q = lorentz_dot(v, v)
    assert q.shape == (3,)
    assert np.allclose(q.value, -1)
    assert np.allclose(q.derivative(2, 0), 2)
    assert np.allclose(q.derivative(1, 1), 0)


def test_fit_jet_recovers_polynomial(rng):
    off = 0.05 * (rng.normal(size=60) + 1j * rng.normal(size=60))
    vals = 2 + off**2 * np.conj(off) - 3j * off
    j = fit_jet(off, vals, 4)
    assert j.derivative(0, 0) == pytest.approx(2)
    assert j.derivative(1, 0) == pytest.approx(-3j)
    assert j.derivative(2, 1) == pytest.approx(2)
