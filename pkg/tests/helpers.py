"""Shared oracles and fixtures-by-construction for the test suite."""

import math
from fractions import Fraction

import numpy as np

from rihom.conjugacy import h_inverse_array
from rihom.maps import PiecewiseMap
from rihom.markov import AtomicMeasure
from rihom.systems import RandomSystem

# criterion number -> pass/fail line, filled by the acceptance tests
ACCEPTANCE: dict[int, str] = {}


def tail_example_system():
    """Left derivatives 1/2 and 4 at the unit endpoint 0; right tails -3/2 and 1/2."""
    F0 = PiecewiseMap.from_breakpoints([(0, -math.log(2)), (2, Fraction(1, 2))])
    F1 = PiecewiseMap.from_breakpoints([(-2, -2 + math.log(4)), (0, Fraction(1, 2))])
    return RandomSystem(F0, F1, Fraction(1, 2))


def random_measure(rng, n=20, lo=-8, hi=8):
    return AtomicMeasure(rng.uniform(lo, hi, n), rng.uniform(0.1, 1, n))


def shrink_into_class(cert, positions, weights):
    """Mix with mass at the unit midpoint until mu((0, x)) <= M x^alpha holds at every atom."""
    w = np.asarray(weights, dtype=float) / np.sum(weights)
    x_unit = h_inverse_array(positions)
    order = np.argsort(x_unit)
    cum = np.cumsum(w[order])
    bound = cert.unit_bound(x_unit[order])
    scale = min(1.0, float(np.min(bound / cum)))
    pos = np.concatenate([positions, [0.0]])
    ws = np.concatenate([w * scale, [1 - scale]])
    return AtomicMeasure(pos, ws)


def boxes_by_scan(f, R, M, M_fine):
    """Linked boxes from the right edge down, with plain linear scans over both grids."""
    n, n_fine = 2**M, 2**M_fine
    xs = [-R + j * 2 * R / n_fine for j in range(n_fine + 1)]
    ys = [-R + i * 2 * R / n for i in range(n + 1)]
    j = n_fine
    i = max(k for k in range(n + 1) if ys[k] <= f(xs[j]))
    out = []
    while i >= 1:
        j_new = next(k for k in range(n_fine + 1) if f(xs[k]) >= ys[i - 1])
        out.append(((xs[j_new], xs[j]), (ys[i - 1], ys[i])))
        i, j = i - 1, j_new
    return out
