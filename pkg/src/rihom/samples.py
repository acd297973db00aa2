"""Reference systems and random generators of valid systems."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .maps import PiecewiseMap, translation, transport_map
from .systems import RandomSystem, lyapunov, validate


def symmetric_drift_system() -> RandomSystem:
    """F0 = x - 1/2 left of 0, affine (0, -1/2) -> (2, 1/2), x - 3/2 right of 2; F1 = -F0(-x); p = 1/2.

    Both Lyapunov exponents at infinity equal 1/2 and the system is symmetric
    under x -> -x with the maps swapped, so the stationary median is 0.
    """
    F0 = PiecewiseMap.from_breakpoints([(0, Fraction(-1, 2)), (2, Fraction(1, 2))])
    return RandomSystem(F0, F0.mirrored(), Fraction(1, 2), {"name": "symmetric-drift"})


def offset_example_system() -> RandomSystem:
    """F0 = x - 3/8; F1 through (-1, -1/2) and (1, 5/4), so its tails translate by 1/2 and 1/4; p = 1/2."""
    F0 = translation(Fraction(-3, 8))
    F1 = PiecewiseMap.from_breakpoints([(-1, Fraction(-1, 2)), (1, Fraction(5, 4))])
    return RandomSystem(F0, F1, Fraction(1, 2), {"name": "offset-example"})


def translation_pair(a0, a1, p=Fraction(1, 2)) -> RandomSystem:
    return RandomSystem(translation(Fraction(a0)), translation(Fraction(a1)), Fraction(p))


def _rational(rng: np.random.Generator, lo: float, hi: float, den: int) -> Fraction:
    return Fraction(int(rng.integers(int(np.ceil(lo * den)), int(np.floor(hi * den)) + 1)), den)


def random_affine_map(rng: np.random.Generator, below: bool, knots: int = 3, den: int = 64) -> PiecewiseMap:
    """Random increasing affine map strictly on one side of the diagonal with rational knots."""
    while True:
        xs = sorted({_rational(rng, -3, 3, den) for _ in range(knots)})
        if len(xs) < 2:
            continue
        offs = [_rational(rng, 0.15, 1.6, den) for _ in xs]
        if below:
            offs = [-o for o in offs]
        pts = [(x, x + o) for x, o in zip(xs, offs)]
        if all(y1 > y0 for (_, y0), (_, y1) in zip(pts, pts[1:])):
            return PiecewiseMap.from_breakpoints(pts)


def random_affine_system(rng: np.random.Generator, knots: int = 3, min_lyapunov: float = 0.1) -> RandomSystem:
    while True:
        F0 = random_affine_map(rng, True, knots)
        F1 = random_affine_map(rng, False, knots)
        p = _rational(rng, 0.3, 0.7, 20)
        s = RandomSystem(F0, F1, p)
        lr = lyapunov(s)
        if min(lr.lambda_minus, lr.lambda_plus) >= min_lyapunov and validate(s).ok:
            return s


def random_unit_points(rng: np.random.Generator, below: bool, knots: int = 3, den: int = 1000):
    """Breakpoints of a random piecewise-linear f of [0, 1] strictly on one side of the diagonal."""
    while True:
        us = sorted({Fraction(int(k), den) for k in rng.integers(1, den, size=knots)})
        vs = []
        for u in us:
            if below:
                lo, hi = max(1, int(u * den * 0.2)), int(u * den) - 1
            else:
                lo, hi = int(u * den) + 1, min(den - 1, int(u * den + (den - u * den) * 0.8))
            if hi < lo:
                break
            vs.append(Fraction(int(rng.integers(lo, hi + 1)), den))
        else:
            pts = [(Fraction(0), Fraction(0))] + list(zip(us, vs)) + [(Fraction(1), Fraction(1))]
            if all(v1 > v0 for (_, v0), (_, v1) in zip(pts, pts[1:])):
                return pts


def random_unit_system(rng: np.random.Generator, knots: int = 3, require_valid: bool = True) -> RandomSystem:
    while True:
        f0 = random_unit_points(rng, True, knots)
        f1 = random_unit_points(rng, False, knots)
        p = _rational(rng, 0.3, 0.7, 20)
        s = RandomSystem(transport_map(f0), transport_map(f1), p)
        if not require_valid or validate(s).ok:
            return s
