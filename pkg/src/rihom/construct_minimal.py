"""Perturbation into a minimal system by irrational translations on the far left.

Left of ``-R - eps`` the perturbed maps translate by eta0 < 0 < eta1 with an
irrational ratio, right of ``-R`` they agree with the input, and an affine
connector joins the two.  Offsets live in Q(sqrt 2): eta0 is rational and
eta1 is a rational multiple of sqrt 2, so irrationality of the ratio is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from .errors import ConstructionError, InfeasibleError, NotExactError
from .maps import AffinePiece, MonotoneMap, PiecewiseMap, sup_distance_bounds
from .numbers import QSqrt2, format_number, is_exact, parse_number
from .systems import RandomSystem, lyapunov, validate

SQRT2 = QSqrt2(0, 1)


def _truncated_multiple(target: Fraction, lo, hi, max_digits: int = 30) -> Fraction:
    """Shortest decimal truncation r of target/sqrt2 with lo < r*sqrt2 < hi, at least two digits."""
    for digits in range(2, max_digits + 1):
        scale = 10**digits
        # floor(target * scale / sqrt2) computed exactly: largest k with k*sqrt2 <= target*scale
        k = math.floor(float(target) * scale / math.sqrt(2))
        while QSqrt2(0, k + 1) <= target * scale:
            k += 1
        while QSqrt2(0, k) > target * scale:
            k -= 1
        r = Fraction(k, scale)
        if r != 0 and lo < QSqrt2(0, r) < hi:
            return r
    raise InfeasibleError("no sqrt2 multiple found inside the offset window")


def _exact_offset(m: MonotoneMap):
    off = m.left_offset
    return off if is_exact(off) else Fraction(float(off))


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def choose_offsets(F: RandomSystem, eps) -> tuple:
    """``(eta0, eta1, eps_used)`` with eta_i in (L_i - eps/2, L_i), positive drift and irrational ratio.

    eta0 is the rational window midpoint ``L0 - eps/4``; eta1 is ``r*sqrt2``
    with r the shortest decimal truncation of ``(L1 - eps/4)/sqrt2`` that
    stays inside its window.  eps is halved toward L1 when it is not below L1.
    """
    L0, L1 = _exact_offset(F.F0), _exact_offset(F.F1)
    if not (L0 < 0 < L1):
        raise InfeasibleError("left tails must translate F0 down and F1 up")
    eps = _as_fraction(eps)
    if eps <= 0:
        raise InfeasibleError("eps must be positive")
    if eps >= L1:
        eps = Fraction(L1) / 2
    p = _as_fraction(F.p)
    eta0 = L0 - eps / 4
    r = _truncated_multiple(L1 - eps / 4, L1 - eps / 2, L1)
    eta1 = QSqrt2(0, r)
    checks = check_offsets(L0, L1, p, eps, eta0, eta1)
    if not (checks["eta0_window"] and checks["eta1_window"]):
        raise InfeasibleError("offset outside its window")
    if not checks["drift_positive"]:
        raise InfeasibleError(f"no positive drift inside the windows at eps = {eps}; decrease eps")
    return eta0, eta1, eps


def check_offsets(L0, L1, p, eps, eta0, eta1) -> dict:
    """Exact checks of the offset requirements in Q(sqrt2)."""
    e0, e1 = QSqrt2.coerce(eta0), QSqrt2.coerce(eta1)
    eps, p = Fraction(eps), Fraction(p)
    # (q0 + r0 s)/(q1 + r1 s) is rational iff (q0, r0) and (q1, r1) are parallel
    irrational = e0.q * e1.r != e1.q * e0.r
    return {
        "eta0_window": bool(L0 - eps / 2 < e0 < L0),
        "eta1_window": bool(L1 - eps / 2 < e1 < L1),
        "drift_positive": bool(p * e0 + (1 - p) * e1 > 0),
        "ratio_irrational": bool(irrational),
    }


def _left_radius(F: RandomSystem) -> Fraction:
    """Smallest integer R with both maps exact translations on (-inf, -R]."""
    lo = 0.0
    for m in F.maps:
        ks = m.float_knots()
        if ks:
            lo = min(lo, ks[0])
    return Fraction(max(1, math.ceil(-lo)))


def splice(m: PiecewiseMap, R: Fraction, eps: Fraction, eta) -> PiecewiseMap:
    """x + eta left of -R - eps, m right of -R, affine in between."""
    L = _exact_offset(m)
    pieces = [AffinePiece(-R - eps, -R - eps + eta, -R, -R + L)]
    if m.pieces:
        first = m.pieces[0]
        if first.x0 > -R:
            # m is still the translation by L up to its first knot
            pieces.append(AffinePiece(-R, -R + L, first.x0, first.y0))
        pieces.extend(m.pieces)
    else:
        pieces.append(AffinePiece(-R, -R + L, R, R + L))
    return PiecewiseMap(pieces)


@dataclass
class MinimalPerturbation:
    system: RandomSystem
    eta0: object
    eta1: object
    R: Fraction
    eps: float
    eps_used: Fraction
    d_m_bound: float
    attempts: int
    checks: dict = field(default_factory=dict)

    @property
    def threshold(self) -> Fraction:
        """Right end of the pure translation regime, -R - eps."""
        return -self.R - self.eps_used

    def descriptor(self) -> dict:
        return {
            "kind": "minimal",
            "eta0": format_number(self.eta0),
            "eta1": format_number(self.eta1),
            "R": str(self.R),
            "eps_used": str(self.eps_used),
            "translation_regime_right_end": format_number(self.threshold),
            "checks": self.checks,
        }

    def report(self) -> dict:
        return {
            "mode": "minimal",
            "eps": self.eps,
            "d_m_upper_bound": self.d_m_bound,
            "d_m_below_eps": self.d_m_bound < self.eps,
            "attempts": self.attempts,
            "valid": bool(validate(self.system).ok),
        }


def perturb_minimal(F: RandomSystem, eps, max_retries: int = 8) -> MinimalPerturbation:
    """An eps-close system which is minimal: dense orbits by an irrational rotation on the far left."""
    if not float(eps) > 0:
        raise ConstructionError("eps must be positive", step="input")
    eta0, eta1, eps_used = choose_offsets(F, eps)
    R = _left_radius(F)
    L0, L1 = _exact_offset(F.F0), _exact_offset(F.F1)
    p = F.p
    checks = check_offsets(L0, L1, _as_fraction(p), eps_used, eta0, eta1)
    last = None
    for attempt in range(max_retries + 1):
        try:
            G0 = splice(F.F0, R, eps_used, eta0)
            G1 = splice(F.F1, R, eps_used, eta1)
            prov = {
                "construction": "minimal",
                "eta0": format_number(eta0),
                "eta1": format_number(eta1),
                "R": str(R),
                "eps_used": str(eps_used),
            }
            G = RandomSystem(G0, G1, F.p, prov)
            rep = validate(G)
            if not rep.ok:
                raise ConstructionError(f"perturbed system fails {rep.failed()}", step="validate")
            d = max(sup_distance_bounds(F.F0, G0)[1], sup_distance_bounds(F.F1, G1)[1])
            if not d < float(eps):
                raise ConstructionError(f"d_m bound {d} not below eps", step="closeness")
            return MinimalPerturbation(G, eta0, eta1, R, float(eps), eps_used, d, attempt + 1, checks)
        except ConstructionError as exc:
            last = exc
            R *= 2
    raise ConstructionError(f"minimal perturbation failed: {last}", step=getattr(last, "step", None))


# ---------------------------------------------------------------------------
# density diagnostic


@dataclass
class DensityReport:
    window: tuple
    n_cells: int
    hits: list
    first_word_length: list
    word_steps: int
    status: str  # "complete" or "inconclusive"

    @property
    def all_visited(self) -> bool:
        return all(h > 0 for h in self.hits)

    def unvisited(self) -> list[int]:
        return [i for i, h in enumerate(self.hits) if h == 0]

    def to_dict(self) -> dict:
        return {
            "window": [float(self.window[0]), float(self.window[1])],
            "cells": self.n_cells,
            "hits": self.hits,
            "first_word_length": self.first_word_length,
            "word_steps": self.word_steps,
            "status": self.status,
        }


def _translation_data(G: RandomSystem, eta0=None, eta1=None, threshold=None):
    prov = G.provenance or {}
    eta0 = eta0 if eta0 is not None else parse_number(prov["eta0"])
    eta1 = eta1 if eta1 is not None else parse_number(prov["eta1"])
    if threshold is None:
        threshold = -parse_number(prov["R"]) - parse_number(prov["eps_used"])
    return eta0, eta1, threshold


def _apply(m: MonotoneMap, x):
    if is_exact(x):
        try:
            return m.exact(x)
        except NotExactError:
            return m.eval(float(x))
    return m.eval(x)


def density_diagnostic(
    G: RandomSystem,
    x0,
    window: tuple = (-5, 5),
    n_cells: int = 40,
    horizon: int = 10**5,
    *,
    regime_only: bool = False,
    eta0=None,
    eta1=None,
    threshold=None,
) -> DensityReport:
    """Greedy search for words carrying x0 into every cell of the window.

    The start is pushed into the translation regime by G0, then rotated
    inside the band ``(T - eta1, T]`` by ``y -> y + eta0 + k*eta1`` (exact).
    From each band point G0 translates down and G1 climbs through the window,
    recording cells.
    With ``regime_only`` only translation words are used, so visited points
    are exactly ``x0 + s*eta0 + t*eta1``.
    """
    eta0, eta1, T = _translation_data(G, eta0, eta1, threshold)
    a, b = float(window[0]), float(window[1])
    width = (b - a) / n_cells
    hits = [0] * n_cells
    first = [None] * n_cells
    steps = 0

    def visit(x, length):
        fx = float(x)
        if a <= fx < b or fx == b:
            i = min(int((fx - a) / width), n_cells - 1)
            hits[i] += 1
            if first[i] is None:
                first[i] = length
            return True
        return False

    x = x0 if is_exact(x0) else Fraction(float(x0))
    length = 0
    visit(x, 0)
    while x > T:
        x = _apply(G.F0, x)
        length += 1
        steps += 1
        visit(x, length)
    # bring into the band (T - eta1, T]
    while x <= T - eta1:
        x = x + eta1
        length += 1
        steps += 1
        visit(x, length)
    while steps < horizon and not all(hits):
        # one rotation step inside the band
        x = x + eta0
        length += 1
        steps += 1
        visit(x, length)
        while x <= T - eta1:
            x = x + eta1
            length += 1
            steps += 1
            visit(x, length)
        # translate down through the part of the window left of the band
        z, zlen = x, length
        while float(z) >= a and steps < horizon and a < float(T):
            z = z + eta0
            zlen += 1
            steps += 1
            visit(z, zlen)
        if regime_only:
            continue
        # climb out of the band with G1 through the window, then descend with G0 once
        y, ylen = x, length
        fy = float(y)
        while fy <= b and steps < horizon:
            y = _apply(G.F1, y) if ylen - length < 4 else G.F1.eval(float(y))
            fy = float(y)
            ylen += 1
            steps += 1
            visit(y, ylen)
            z = G.F0.eval(fy)
            steps += 1
            visit(z, ylen + 1)
    status = "complete" if all(hits) else "inconclusive"
    return DensityReport((a, b), n_cells, hits, first, steps, status)
