"""Atomic measures, the Markov operator of a random system, tail certificates and a Monte Carlo oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .errors import DomainError, InfeasibleError
from .maps import PiecewiseMap
from .systems import RandomSystem


class Staircase:
    """Right-continuous nondecreasing step function: ``values[i]`` holds on ``[xs[i], xs[i+1])``, 0 before ``xs[0]``."""

    __slots__ = ("xs", "values")

    def __init__(self, xs, values):
        self.xs = np.asarray(xs, dtype=float)
        self.values = np.asarray(values, dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.xs, x, side="right") - 1
        out = np.where(i >= 0, self.values[np.clip(i, 0, None)] if len(self.values) else 0.0, 0.0)
        return out if out.ndim else float(out)

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.xs, x, side="left") - 1
        out = np.where(i >= 0, self.values[np.clip(i, 0, None)] if len(self.values) else 0.0, 0.0)
        return out if out.ndim else float(out)

    def breakpoints(self) -> np.ndarray:
        return self.xs


class AtomicMeasure:
    """Finite combination of point masses with sorted distinct positions."""

    __slots__ = ("positions", "weights")

    def __init__(self, positions, weights, normalize: bool = True):
        pos = np.asarray(positions, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        if pos.shape != w.shape:
            raise DomainError("positions and weights differ in length")
        if np.any(w < 0) or not np.all(np.isfinite(pos)):
            raise DomainError("weights must be nonnegative and positions finite")
        uniq, inv = np.unique(pos, return_inverse=True)
        agg = np.bincount(inv, weights=w, minlength=len(uniq))
        keep = agg > 0
        self.positions = uniq[keep]
        self.weights = agg[keep]
        if normalize:
            total = self.weights.sum()
            if total <= 0:
                raise DomainError("measure has no mass")
            self.weights = self.weights / total

    @classmethod
    def dirac(cls, x) -> "AtomicMeasure":
        return cls([float(x)], [1.0])

    @classmethod
    def from_samples(cls, samples) -> "AtomicMeasure":
        s = np.asarray(samples, dtype=float).ravel()
        return cls(s, np.full(len(s), 1.0 / len(s)), normalize=False)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def cdf(self) -> Staircase:
        return Staircase(self.positions, np.cumsum(self.weights))

    def mass_in(self, lo, hi, closed: bool = True) -> float:
        if closed:
            a = np.searchsorted(self.positions, lo, side="left")
            b = np.searchsorted(self.positions, hi, side="right")
        else:
            a = np.searchsorted(self.positions, lo, side="right")
            b = np.searchsorted(self.positions, hi, side="left")
        return float(self.weights[a:b].sum())

    def __len__(self):
        return len(self.positions)

    def __repr__(self):
        return f"AtomicMeasure({len(self)} atoms, mass={self.mass:.15g})"


def _as_staircase(obj) -> Staircase:
    if isinstance(obj, Staircase):
        return obj
    if isinstance(obj, AtomicMeasure):
        return obj.cdf()
    if hasattr(obj, "midpoint"):
        return obj.midpoint()
    raise TypeError(f"not CDF-like: {type(obj).__name__}")


def kolmogorov_distance(a, b) -> float:
    """Sup-norm distance of two CDFs, evaluated over their merged breakpoints."""
    A, B = _as_staircase(a), _as_staircase(b)
    xs = np.union1d(A.breakpoints(), B.breakpoints())
    if len(xs) == 0:
        return 0.0
    return float(np.max(np.abs(A(xs) - B(xs))))


def push_forward(m, mu: AtomicMeasure, tol: float = 1e-12) -> AtomicMeasure:
    return AtomicMeasure(m.eval_array(mu.positions, tol), mu.weights, normalize=False)


def apply_markov(system: RandomSystem, mu: AtomicMeasure, tol: float = 1e-12) -> AtomicMeasure:
    """``p (F0)_* mu + (1 - p) (F1)_* mu``."""
    p = float(system.p)
    y0 = system.F0.eval_array(mu.positions, tol)
    y1 = system.F1.eval_array(mu.positions, tol)
    return AtomicMeasure(np.concatenate([y0, y1]), np.concatenate([p * mu.weights, (1 - p) * mu.weights]), normalize=False)


# ---------------------------------------------------------------------------
# tail certificates


def xi(alpha: float, beta: float, p: float, lam0: float, lam1: float) -> float:
    """``(p + beta) lam0^-alpha + (1 - p - beta) lam1^-alpha``."""
    return (p + beta) * math.exp(-alpha * math.log(lam0)) + (1 - p - beta) * math.exp(-alpha * math.log(lam1))


@dataclass(frozen=True)
class TailCertificate:
    """``mu((0, x)) <= M x^alpha`` for x in (0, x0) at one endpoint, in unit coordinates.

    ``side`` is "left" (endpoint 0) or "right" (endpoint 1, mirrored).
    ``edge`` is the real coordinate of x0 on that side.
    """

    side: str
    p: float
    derivatives: tuple[float, float]
    lam0: float
    lam1: float
    alpha: float
    M: float
    x0: float
    edge: float
    delta: float

    @property
    def xi0(self) -> float:
        return xi(self.alpha, 0.0, self.p, self.lam0, self.lam1)

    def unit_bound(self, x) -> np.ndarray:
        return self.M * np.asarray(x, dtype=float) ** self.alpha

    def tail_mass(self, y: float) -> float:
        """Bound on the stationary mass beyond the real point y (left of it or right of it, by side)."""
        d = y if self.side == "left" else -y
        return min(1.0, self.M * math.exp(self.alpha * (d - math.log(2.0))))

    def window_edge(self, mass: float) -> float:
        """A real point beyond which the certified tail mass is at most ``mass``."""
        d = math.log(2.0) + math.log(mass / self.M) / self.alpha
        return d if self.side == "left" else -d

    def holds_for(self, mu: AtomicMeasure, xs_real) -> bool:
        """Check the bound on the open tail beyond each real point."""
        xs = np.asarray(xs_real, dtype=float)
        csum = np.concatenate([[0.0], np.cumsum(mu.weights)])
        if self.side == "left":
            mass = csum[np.searchsorted(mu.positions, xs, side="left")]
            d = xs
        else:
            mass = csum[-1] - csum[np.searchsorted(mu.positions, xs, side="right")]
            d = -xs
        bound = self.M * np.exp(self.alpha * (d - math.log(2.0)))
        return bool(np.all(mass <= bound * (1 + 1e-12)))


def _tail_region(maps, side: str) -> float:
    """Distance E such that beyond -E (left) or E (right) every map is a translation keeping its side of 0."""
    reach = 0.0
    for m in maps:
        knots = m.float_knots()
        if side == "left":
            if knots:
                reach = max(reach, -knots[0])
            reach = max(reach, float(m.left_offset))
        else:
            if knots:
                reach = max(reach, knots[-1])
            reach = max(reach, -float(m.right_offset))
    return reach


def _alpha_root(p: float, lam0: float, lam1: float) -> float:
    """Positive root of xi(alpha, 0) = 1, or inf when xi stays below 1."""
    f = lambda a: xi(a, 0.0, p, lam0, lam1) - 1.0
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
        if hi > 1e6:
            return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0 and mid > 0:
            lo = mid
        else:
            hi = mid
    return lo


def side_certificate(
    p: float,
    derivatives: tuple[float, float],
    side: str,
    edge: float,
    lambdas: Optional[tuple[float, float]] = None,
    alpha: Optional[float] = None,
    margin: float = 1.01,
) -> TailCertificate:
    """Invariant tail class at one endpoint from the endpoint derivatives.

    ``edge`` is a real point (negative for the left side) such that both maps
    are exact translations on the tail beyond it.
    """
    d0, d1 = derivatives
    lyap = p * math.log(d0) + (1 - p) * math.log(d1)
    if lyap <= 0:
        raise InfeasibleError(f"Lyapunov exponent at the {side} endpoint is not positive")
    if lambdas is None:
        theta = max(0.9, math.exp(-lyap / 2))
        lam0, lam1 = theta * d0, theta * d1
    else:
        lam0, lam1 = lambdas
        if not (lam0 < d0 and lam1 < d1):
            raise InfeasibleError("lambda_i must lie below the endpoint derivatives")
        if p * math.log(lam0) + (1 - p) * math.log(lam1) <= 0:
            raise InfeasibleError("chosen lambdas have nonpositive averaged logarithm")
    if alpha is None:
        alpha = min(0.5 * _alpha_root(p, lam0, lam1), 0.5)
    if not 0 < alpha < 1:
        raise InfeasibleError("alpha must lie in (0, 1)")
    x0 = 0.5 * math.exp(edge if side == "left" else -edge)
    val = xi(alpha, 0.0, p, lam0, lam1)
    if not val < 1:
        raise InfeasibleError(f"xi(alpha, 0) = {val} is not below 1")
    spread = abs(lam0 ** (-alpha) - lam1 ** (-alpha))
    delta = (1 - val) / spread if spread > 0 else math.inf
    M = margin / x0**alpha
    return TailCertificate(side, p, (d0, d1), lam0, lam1, alpha, M, x0, edge, delta)


def tail_certificate(system: RandomSystem, **kw) -> tuple[TailCertificate, TailCertificate]:
    """Certificates at both endpoints (left = unit endpoint 0, right = unit endpoint 1)."""
    p = float(system.p)
    a0m, a0p = system.F0.tail_offsets()
    a1m, a1p = system.F1.tail_offsets()
    left_edge = -_tail_region(system.maps, "left")
    right_edge = _tail_region(system.maps, "right")
    left = side_certificate(p, (math.exp(a0m), math.exp(a1m)), "left", left_edge, **kw)
    right = side_certificate(p, (math.exp(-a0p), math.exp(-a1p)), "right", right_edge, **kw)
    return left, right


# ---------------------------------------------------------------------------
# Monte Carlo


def monte_carlo_samples(
    system: RandomSystem,
    n_samples: int,
    burn_in: int,
    seed: int,
    n_streams: int = 1000,
    start: float = 0.0,
) -> np.ndarray:
    """Run ``n_streams`` independent chains from ``start``; keep states after ``burn_in`` steps."""
    if n_samples <= 0 or burn_in <= 0:
        raise DomainError("n_samples and burn_in must be positive")
    n_streams = min(n_streams, n_samples)
    per = -(-n_samples // n_streams)
    u = rng.uniform_matrix(seed, n_streams, burn_in + per)
    p = float(system.p)
    x = np.full(n_streams, float(start))
    out = np.empty((per, n_streams))
    for t in range(burn_in + per):
        choose0 = u[:, t] < p
        y = np.empty_like(x)
        if choose0.any():
            y[choose0] = system.F0.eval_array(x[choose0])
        if (~choose0).any():
            y[~choose0] = system.F1.eval_array(x[~choose0])
        x = y
        if t >= burn_in:
            out[t - burn_in] = x
    return out.ravel()[:n_samples]


def monte_carlo_cdf(system: RandomSystem, n_samples: int, burn_in: int, seed: int, n_streams: int = 1000) -> AtomicMeasure:
    """Empirical stationary distribution; deterministic given the seed."""
    return AtomicMeasure.from_samples(monte_carlo_samples(system, n_samples, burn_in, seed, n_streams))


def is_affine_system(system: RandomSystem) -> bool:
    return all(isinstance(m, PiecewiseMap) and m.is_affine for m in system.maps)
