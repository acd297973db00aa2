from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rihom.numbers import QSqrt2, floor_div, format_number, parse_number

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=1000)
elements = st.builds(QSqrt2, rationals, rationals)


@pytest.fixture(autouse=True)
def high_precision():
    with mpmath.workdps(60):
        yield


def hp(x: QSqrt2):
    """High-precision value, independent of the class's own float conversion."""
    return mpmath.mpf(x.q.numerator) / x.q.denominator + mpmath.mpf(x.r.numerator) / x.r.denominator * mpmath.sqrt(2)


@given(elements, elements)
def test_ring_operations_match_high_precision(a, b):
    assert abs(hp(a + b) - (hp(a) + hp(b))) < mpmath.mpf(10) ** -40
    assert abs(hp(a - b) - (hp(a) - hp(b))) < mpmath.mpf(10) ** -40
    assert abs(hp(a * b) - hp(a) * hp(b)) < mpmath.mpf(10) ** -35
    if a.q != 0 or a.r != 0:
        assert abs(hp(b / a) - hp(b) / hp(a)) < mpmath.mpf(10) ** -25


@given(elements, elements)
def test_order_matches_high_precision(a, b):
    diff = hp(a) - hp(b)
    if diff > 0:
        assert a > b and not a <= b
    elif diff < 0:
        assert a < b
    else:
        assert a == b


@given(elements)
def test_sign_and_norm(a):
    assert a.sign() == (hp(a) > 0) - (hp(a) < 0)
    assert a.norm() == a.q**2 - 2 * a.r**2
    assert a * a.conjugate() == a.norm()


@given(elements)
def test_format_parse_round_trip(a):
    assert parse_number(format_number(a)) == a


@pytest.mark.parametrize(
    "text, value",
    [
        ("1/2", Fraction(1, 2)),
        ("0.125", Fraction(1, 8)),
        ("33/100*sqrt2", QSqrt2(0, Fraction(33, 100))),
        ("1 - 2*sqrt2", QSqrt2(1, -2)),
        ("sqrt2", QSqrt2(0, 1)),
        ({"q": "1/3", "r": "0"}, Fraction(1, 3)),
    ],
)
def test_parse_examples(text, value):
    assert parse_number(text) == value


def test_parse_rejects_booleans():
    with pytest.raises(ValueError):
        parse_number(True)


@given(elements, st.fractions(min_value=Fraction(1, 100), max_value=10, max_denominator=100))
def test_floor_div_exact(x, step):
    k = floor_div(x, step)
    assert QSqrt2.coerce(step * k) <= x < QSqrt2.coerce(step * (k + 1))


def test_sqrt2_irrational_parts():
    s = QSqrt2(0, 1)
    assert s * s == 2
    assert not s.is_rational and (s * s).r == 0
