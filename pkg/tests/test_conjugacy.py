import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rihom.conjugacy import (
    dh,
    h_forward,
    h_forward_array,
    h_inverse,
    h_inverse_array,
    pullback_measure,
    pushforward_measure,
)
from rihom.errors import DomainError
from rihom.maps import PiecewiseMap, endpoint_derivatives, transport_map
from rihom.markov import AtomicMeasure

LOG2 = math.log(2)
units = st.floats(min_value=1e-12, max_value=1 - 1e-12, allow_nan=False)


@pytest.mark.parametrize("x, y", [(0.5, 0.0), (0.25, -LOG2), (0.75, LOG2)])
def test_h_known_values(x, y):
    assert h_forward(x) == pytest.approx(y, abs=1e-15)
    assert h_inverse(y) == pytest.approx(x, abs=1e-15)


@pytest.mark.parametrize("x", [0.0, 1.0, -0.1, 1.5])
def test_h_rejects_closed_endpoints(x):
    with pytest.raises(DomainError):
        h_forward(x)


def test_inverse_rejects_infinite():
    with pytest.raises(DomainError):
        h_inverse(math.inf)


def test_metric_examples():
    assert dh(0.3, 0.3) == 0
    assert dh(1 / 8, 1 / 4) == pytest.approx(LOG2)
    assert dh(0.25, 0.75) == pytest.approx(2 * LOG2)


@given(units)
def test_round_trip(x):
    assert h_inverse(h_forward(x)) == pytest.approx(x, rel=1e-12, abs=1e-15)


@given(units, units)
def test_h_is_increasing(a, b):
    if a < b:
        assert h_forward(a) <= h_forward(b)


@given(units, units, units)
def test_metric_triangle(a, b, c):
    assert dh(a, c) <= dh(a, b) + dh(b, c) + 1e-9


@given(st.lists(units, min_size=1, max_size=30))
def test_array_forms_agree(xs):
    arr = np.array(xs)
    assert np.allclose(h_forward_array(arr), [h_forward(x) for x in xs], rtol=1e-14, atol=1e-14)
    ys = h_forward_array(arr)
    assert np.allclose(h_inverse_array(ys), [h_inverse(y) for y in ys], rtol=1e-14, atol=0)


def test_measure_transport():
    mu = AtomicMeasure([0.25, 0.75], [0.5, 0.5])
    nu = pushforward_measure(mu)
    assert np.allclose(nu.positions, [-LOG2, LOG2])
    assert np.allclose(nu.weights, [0.5, 0.5])
    back = pullback_measure(nu)
    assert np.allclose(back.positions, [0.25, 0.75])
    assert np.allclose(pushforward_measure(AtomicMeasure([0.5], [1.0])).positions, [0.0])


def test_identity_conjugates_to_identity():
    m = transport_map([(0, 0), (1, 1)])
    xs = np.linspace(-20, 20, 101)
    assert np.allclose(m.eval_array(xs), xs, atol=1e-12)


def test_piecewise_linear_unit_map_tails():
    # x/2 on [0, 1/2], (3x - 1)/2 on [1/2, 1]
    m = transport_map([("0", "0"), ("1/2", "1/4"), ("1", "1")])
    a_minus, a_plus = m.tail_offsets()
    assert a_minus == pytest.approx(-LOG2, abs=1e-12)
    assert a_plus == pytest.approx(-math.log(1.5), abs=1e-12)
    d0, d1 = endpoint_derivatives(m)
    assert d0 == pytest.approx(0.5) and d1 == pytest.approx(1.5)


@given(st.floats(min_value=0.05, max_value=20))
def test_linear_germ_becomes_translation(slope):
    # f(u) = slope * u near 0 conjugates to x -> x + log(slope) far left
    u1 = min(0.25, 0.25 / slope)
    m = transport_map([(0, 0), (u1, slope * u1), (1, 1)])
    x = -30.0
    assert m.eval(x) - x == pytest.approx(math.log(slope), abs=1e-9)


def test_translation_map_has_equal_offsets():
    m = PiecewiseMap([], offset=-0.5)
    assert m.tail_offsets() == (-0.5, -0.5)
