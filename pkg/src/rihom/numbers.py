"""Exact scalars: rationals and the quadratic field Q(sqrt 2).

Everything that must be decided exactly (grid levels, diagonal tests, Cantor
membership, irrational translation offsets) is carried in these types.
Floats enter only through :func:`to_float`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

_SQRT2 = math.sqrt(2.0)


class QSqrt2:
    """An element ``q + r*sqrt(2)`` with rational ``q`` and ``r``."""

    __slots__ = ("q", "r")

    def __init__(self, q=0, r=0):
        self.q = Fraction(q)
        self.r = Fraction(r)

    @classmethod
    def coerce(cls, value) -> "QSqrt2":
        if isinstance(value, QSqrt2):
            return value
        if isinstance(value, (int, Fraction, Rational)):
            return cls(value, 0)
        if isinstance(value, float):
            return cls(Fraction(value), 0)
        raise TypeError(f"cannot coerce {type(value).__name__} to QSqrt2")

    @property
    def is_rational(self) -> bool:
        return self.r == 0

    def simplify(self):
        """Drop to a plain Fraction when the irrational part vanishes."""
        return self.q if self.r == 0 else self

    def conjugate(self) -> "QSqrt2":
        return QSqrt2(self.q, -self.r)

    def norm(self) -> Fraction:
        return self.q * self.q - 2 * self.r * self.r

    def sign(self) -> int:
        q, r = self.q, self.r
        sq = (q > 0) - (q < 0)
        sr = (r > 0) - (r < 0)
        if sr == 0:
            return sq
        if sq == 0 or sq == sr:
            return sr
        # opposite signs: compare q^2 with 2 r^2
        n = q * q - 2 * r * r
        return sq if n > 0 else (sr if n < 0 else 0)

    def __float__(self) -> float:
        return float(self.q) + float(self.r) * _SQRT2

    def __neg__(self):
        return QSqrt2(-self.q, -self.r)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        o = QSqrt2.coerce(other)
        return QSqrt2(self.q + o.q, self.r + o.r)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, float):
            return float(self) - other
        o = QSqrt2.coerce(other)
        return QSqrt2(self.q - o.q, self.r - o.r)

    def __rsub__(self, other):
        if isinstance(other, float):
            return other - float(self)
        return QSqrt2.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        o = QSqrt2.coerce(other)
        return QSqrt2(self.q * o.q + 2 * self.r * o.r, self.q * o.r + self.r * o.q)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        o = QSqrt2.coerce(other)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt 2)")
        return self * QSqrt2(o.q / n, -o.r / n)

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        return QSqrt2.coerce(other) / self

    def _cmp(self, other) -> int:
        if isinstance(other, float):
            if math.isnan(other):
                raise ValueError("comparison with nan")
            if math.isinf(other):
                return -1 if other > 0 else 1
            other = Fraction(other)
        return (self - other).sign()

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self.r == 0:
            return hash(self.q)
        return hash((self.q, self.r))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __repr__(self):
        return f"QSqrt2({self.q}, {self.r})"

    def __str__(self):
        return format_number(self)


Exact = Union[Fraction, QSqrt2]
Number = Union[int, float, Fraction, QSqrt2]


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QSqrt2))


def exact(x) -> Exact:
    """Exact value of ``x``; floats convert to their binary value."""
    if isinstance(x, QSqrt2):
        return x.simplify()
    return Fraction(x)


def to_float(x) -> float:
    return float(x)


def _parse_qsqrt2(s: str) -> QSqrt2:
    t = s.replace(" ", "")
    for suffix in ("*sqrt(2)", "*sqrt2", "sqrt(2)", "sqrt2"):
        if t.endswith(suffix):
            head = t[: -len(suffix)]
            break
    else:
        raise ValueError(f"cannot parse {s!r}")
    # split head into rational part and coefficient at the last top-level sign
    cut = max(head.rfind("+"), head.rfind("-"))
    if cut <= 0:
        q, coeff = "0", head
    else:
        q, coeff = head[:cut], head[cut:]
    if coeff in ("", "+"):
        coeff = "1"
    elif coeff == "-":
        coeff = "-1"
    return QSqrt2(Fraction(q), Fraction(coeff))


def parse_number(value) -> Number:
    """Parse a serialized scalar.

    Accepts JSON numbers, ``"n/d"`` and decimal strings (parsed exactly as
    rationals) and ``{"q": ..., "r": ...}`` or ``"q + r*sqrt2"`` for Q(sqrt 2).
    """
    if isinstance(value, bool):
        raise ValueError("boolean is not a number")
    if isinstance(value, (int, Fraction, QSqrt2)):
        return value
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, dict):
        return QSqrt2(Fraction(str(value.get("q", 0))), Fraction(str(value.get("r", 0)))).simplify()
    if isinstance(value, str):
        s = value.strip()
        if "sqrt" in s:
            return _parse_qsqrt2(s).simplify()
        return Fraction(s)
    raise ValueError(f"cannot parse {value!r} as a number")


def format_number(x) -> str:
    """Inverse of :func:`parse_number` for exact values."""
    if isinstance(x, QSqrt2):
        if x.r == 0:
            return format_number(x.q)
        if x.q == 0:
            return f"{x.r}*sqrt2"
        sign = "-" if x.r < 0 else "+"
        return f"{x.q} {sign} {abs(x.r)}*sqrt2"
    if isinstance(x, float):
        x = Fraction(x)
    return str(Fraction(x))


def floor_div(x: Exact, step: Fraction) -> int:
    """floor(x / step) computed exactly."""
    if isinstance(x, QSqrt2):
        # bracket by float then fix up exactly
        k = math.floor(float(x) / float(step))
        while QSqrt2.coerce(step * k) > x:
            k -= 1
        while QSqrt2.coerce(step * (k + 1)) <= x:
            k += 1
        return k
    return math.floor(Fraction(x) / step)
