"""The logarithmic conjugacy between the open unit interval and the real line.

``h(x) = log(2x)`` on ``(0, 1/2]`` and ``-log(2(1-x))`` on ``[1/2, 1)``.  Under
``h`` a linear germ ``x -> l*x`` at 0 becomes the translation ``y -> y + log l``,
which is why derivatives at the endpoints turn into tail offsets of the
conjugated map.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

LOG2 = math.log(2.0)


def h_forward(x: float) -> float:
    """Map a point of (0, 1) to the real line."""
    x = float(x)
    if not 0.0 < x < 1.0:
        raise DomainError(f"h is defined on the open interval (0, 1), got {x!r}")
    if x <= 0.5:
        return math.log(x) + LOG2
    return -(math.log1p(-x) + LOG2)


def h_inverse(y: float) -> float:
    """Map a real number back into (0, 1)."""
    y = float(y)
    if not math.isfinite(y):
        raise DomainError(f"h^-1 needs a finite argument, got {y!r}")
    if y <= 0.0:
        return 0.5 * math.exp(y)
    return 1.0 - 0.5 * math.exp(-y)


def h_forward_array(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise DomainError("h is defined on the open interval (0, 1)")
    lower = x <= 0.5
    out = np.empty_like(x)
    out[lower] = np.log(x[lower]) + LOG2
    out[~lower] = -(np.log1p(-x[~lower]) + LOG2)
    return out


def h_inverse_array(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    neg = y <= 0.0
    out = np.empty_like(y)
    out[neg] = 0.5 * np.exp(y[neg])
    out[~neg] = 1.0 - 0.5 * np.exp(-y[~neg])
    return out


def unit_gap(y: float) -> float:
    """Distance from h^-1(y) to the nearer endpoint of [0, 1], without cancellation."""
    return 0.5 * math.exp(-abs(float(y)))


def dh(x: float, y: float) -> float:
    """The metric |h(x) - h(y)| on (0, 1)."""
    return abs(h_forward(x) - h_forward(y))


def pushforward_measure(measure):
    """Carry an atomic measure on (0, 1) to the real line (h_*)."""
    from .markov import AtomicMeasure

    return AtomicMeasure(h_forward_array(measure.positions), measure.weights, normalize=False)


def pullback_measure(measure):
    """Carry an atomic measure on the real line back to (0, 1) ((h^-1)_*)."""
    from .markov import AtomicMeasure

    return AtomicMeasure(h_inverse_array(measure.positions), measure.weights, normalize=False)
