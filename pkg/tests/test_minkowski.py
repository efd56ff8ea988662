from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wll.lie_algebra import QQ_I
from wll.minkowski import (
    LorentzVector,
    MetricSignature,
    is_forward_lightlike,
    lift_to_cone,
    lorentz_inner,
    metric,
    projectivize,
)


def test_metric_signature():
    assert MetricSignature(4).diagonal() == [-1, 1, 1, 1]
    assert np.array_equal(metric(3), np.diag([-1.0, 1, 1]))
    with pytest.raises(ValueError):
        MetricSignature(3, 5)


def test_lorentz_vector_needs_even_length():
    assert LorentzVector(tuple(range(6))).m == 3
    with pytest.raises(ValueError):
        LorentzVector((1, 2, 3))
    with pytest.raises(ValueError):
        LorentzVector((1, 2, 3, 4))


def test_inner_product_exact_and_float():
    assert lorentz_inner([1, 1, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0]) == 0
    q = lorentz_inner([QQ_I(1), QQ_I(1), QQ_I(0)], [QQ_I(1), QQ_I(1), QQ_I(0)])
    assert not q
    assert lorentz_inner([Fraction(1, 2), 0], [2, 3]) == -1
    with pytest.raises(ValueError):
        lorentz_inner([1, 2], [1, 2, 3])


def test_inner_product_batched():
    x = np.array([[1.0, 1, 0], [2.0, 0, 2]])
    assert np.allclose(lorentz_inner(x, x), [0.0, 0.0])
    with pytest.raises(ValueError):
        lorentz_inner(np.ones((2, 3)), np.ones((2, 4)))


def test_lightlike_classification():
    assert is_forward_lightlike([1, 1, 0, 0])
    assert not is_forward_lightlike([-1, 1, 0, 0])
    assert not is_forward_lightlike([1, 0, 0, 0])
    assert not is_forward_lightlike([0, 0, 0, 0])
    # within tolerance relative to |x|^2
    assert is_forward_lightlike([1.0, 1.0 + 1e-12, 0.0])


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=7).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_projectivize_roundtrip(v):
    y = np.array(v) / np.linalg.norm(v)
    x = 3.5 * lift_to_cone(y)
    assert is_forward_lightlike(x)
    assert np.allclose(projectivize(x), y)


def test_projectivize_rejects_off_cone():
    with pytest.raises(ValueError):
        projectivize([1.0, 0.5, 0.0])
