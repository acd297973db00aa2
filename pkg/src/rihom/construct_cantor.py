"""Perturbation of a random system into one whose stationary measure lives on a grid Cantor set.

Inside ``[-R, R]`` each map is replaced by a chain of linked boxes of one
y-grid level in height; on every box the new map is the Cantor order
homeomorphism between the x- and y-ranges, so the grid Cantor set S (cells of
the fine x-grid) is invariant.  Outside the chain the new map translates by a
multiple of the cell width through the chain's end points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .cantor import GridCantorSet, TransportPlan
from .errors import ConstructionError, NotExactError
from .maps import MonotoneMap, PiecewiseMap, TransportPiece, sup_distance_bounds
from .numbers import format_number, is_exact
from .systems import RandomSystem, lyapunov, validate


@dataclass(frozen=True)
class ConstructionParams:
    R: Fraction
    M: int
    M_fine: int
    eps: float
    eps_effective: float

    @cached_property
    def y_step(self) -> Fraction:
        return 2 * self.R / 2**self.M

    @cached_property
    def x_step(self) -> Fraction:
        return 2 * self.R / 2**self.M_fine

    def y(self, i: int) -> Fraction:
        return -self.R + i * self.y_step

    def x(self, j: int) -> Fraction:
        return -self.R + j * self.x_step

    def cantor(self) -> GridCantorSet:
        return GridCantorSet(self.x_step, -self.R)

    def to_dict(self) -> dict:
        return {
            "R": str(self.R),
            "M": self.M,
            "M_fine": self.M_fine,
            "y_step": str(self.y_step),
            "x_step": str(self.x_step),
            "eps": self.eps,
            "eps_effective": self.eps_effective,
        }


@dataclass(frozen=True)
class Box:
    lx: Fraction
    rx: Fraction
    ly: Fraction
    ry: Fraction

    def as_tuple(self):
        return ((self.lx, self.rx), (self.ly, self.ry))

    def to_list(self):
        return [[str(self.lx), str(self.rx)], [str(self.ly), str(self.ry)]]


@dataclass(frozen=True)
class BoxChain:
    boxes: tuple
    entry: tuple  # (L_x, L_y)
    exit: tuple  # (R_x, R_y)
    direction: str

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "boxes": [b.to_list() for b in self.boxes],
            "L": [str(v) for v in self.entry],
            "R": [str(v) for v in self.exit],
        }


def _value(m: MonotoneMap, x):
    try:
        return m.exact(x)
    except NotExactError:
        return m.eval(float(x))


def _knot_extent(m: MonotoneMap) -> float:
    ext = 0.0
    if isinstance(m, PiecewiseMap):
        for x, y in m.breakpoints():
            ext = max(ext, abs(float(x)), abs(float(y)))
    else:
        ext = max([0.0] + [abs(k) for k in m.float_knots()])
    return ext


def choose_radius(F0: MonotoneMap, F1: MonotoneMap) -> Fraction:
    """Smallest power of two beyond every knot, with F0(R) > -R and F1(-R) < R."""
    ext = max(_knot_extent(F0), _knot_extent(F1))
    R = Fraction(1, 2)
    while R <= ext or not (_value(F0, R) > -R and _value(F1, -R) < R):
        R *= 2
    return R


def _diagonal_gap(m: MonotoneMap, R: Fraction):
    """min over [-R, R] of |m(x) - x|; exact for affine maps, sampled otherwise."""
    if isinstance(m, PiecewiseMap) and m.is_affine:
        pts = [-R, R] + [x for x, _ in m.breakpoints() if -R < x < R]
        return min(abs(m.exact(x) - x) for x in pts)
    xs = np.linspace(float(-R), float(R), 4001)
    return 0.5 * float(np.min(np.abs(m.eval_array(xs) - xs)))


def _max_slope(m: MonotoneMap):
    if isinstance(m, PiecewiseMap) and m.is_affine:
        return max([Fraction(1)] + [p.slope for p in m.pieces])
    return None


def _grid_increments_ok(m: MonotoneMap, R: Fraction, M_fine: int, h) -> bool:
    """Every step of the fine x-grid raises m by less than one y-level."""
    s = _max_slope(m)
    w = 2 * R / 2**M_fine
    if s is not None:
        return s * w < h
    xs = np.array([float(-R + j * w) for j in range(2**M_fine + 1)])
    return bool(np.max(np.diff(m.eval_array(xs))) < float(h))


def choose_levels(
    R: Fraction,
    eps: float,
    below: Optional[MonotoneMap] = None,
    above: Optional[MonotoneMap] = None,
    min_M: int = 1,
    min_gap: int = 1,
) -> tuple[int, int]:
    """Smallest y-level M and then x-level M' > M meeting the grid conditions for the given maps."""
    maps = [m for m in (below, above) if m is not None]
    bounds = [Fraction(eps) / 2]
    for m in maps:
        bounds.append(_diagonal_gap(m, R))
    if below is not None:
        bounds.append(abs(-R - _value(below, R)))
    if above is not None:
        bounds.append(abs(R - _value(above, -R)))
    M = max(min_M, 1)
    while not all(2 * R / 2**M < b for b in bounds):
        M += 1
        if M > 60:
            raise ConstructionError("no admissible y-level", step="choose_levels")
    h = 2 * R / 2**M
    M_fine = max(M + min_gap, M + 1)
    while not all(_grid_increments_ok(m, R, M_fine, h) for m in maps):
        M_fine += 1
        if M_fine > M + 30:
            raise ConstructionError("no admissible x-level", step="choose_levels")
    return M, M_fine


def choose_params(F: RandomSystem, eps: float, extra: int = 0) -> ConstructionParams:
    lr = lyapunov(F)
    eps_eff = min(float(eps), lr.lambda_minus / 2, lr.lambda_plus / 2)
    R = choose_radius(F.F0, F.F1)
    M, M_fine = choose_levels(R, eps_eff, F.F0, F.F1)
    return ConstructionParams(R, M + extra, M_fine + extra, float(eps), eps_eff)


def _chain_below(f: Callable, params: ConstructionParams) -> list[Box]:
    """The right-to-left linked-box loop for a map below the diagonal."""
    n_fine, n = 2**params.M_fine, 2**params.M
    j = n_fine
    r_x = params.x(j)
    fr = f(r_x)
    i = max(k for k in range(n + 1) if params.y(k) <= fr) if params.y(0) <= fr else -1
    if i < 1:
        raise ConstructionError("no box fits below the right edge", step="first_box")
    r_y = params.y(i)
    boxes = []
    while True:
        l_y = params.y(i - 1)
        j_new = _first_reaching(f, params, l_y, j)
        if j_new is None or j_new == 0:
            raise ConstructionError(f"level {i}: the chain reaches the left edge x_0 before y_0", step="box_loop")
        l_x = params.x(j_new)
        if not l_x < r_x:
            raise ConstructionError(f"level {i}: empty box", step="box_loop")
        boxes.append(Box(l_x, r_x, l_y, r_y))
        if i == 1:
            return boxes
        i -= 1
        j = j_new
        r_x, r_y = l_x, l_y


def _first_reaching(f, params, level, j_hi):
    """min{j : f(x_j) >= level}, searching below j_hi (f increasing).

    Gallops down from j_hi, since the answer sits a few fine cells below it.
    """
    if not f(params.x(j_hi)) >= level:
        return None
    hi, step = j_hi, 1
    lo = hi - step
    while lo > 0 and f(params.x(lo)) >= level:
        hi, step = lo, 2 * step
        lo = hi - step
    if lo <= 0:
        if f(params.x(0)) >= level:
            return 0
        lo = 0
    # f(x_lo) < level <= f(x_hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(params.x(mid)) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def build_boxes(m: MonotoneMap, params: ConstructionParams, direction: str) -> BoxChain:
    """Linked boxes for a map below ("below") or above ("above") the diagonal.

    The above-diagonal chain is the mirror image of the below-diagonal chain
    of ``x -> -m(-x)``, which is the left-to-right loop run on m.
    """
    if direction == "below":
        boxes = _chain_below(lambda x: _value(m, x), params)
    elif direction == "above":
        mirrored = _chain_below(lambda x: -_value(m, -x), params)
        boxes = [Box(-b.rx, -b.lx, -b.ry, -b.ly) for b in mirrored]
    else:
        raise ValueError("direction must be 'below' or 'above'")
    lx = min(b.lx for b in boxes)
    ly = min(b.ly for b in boxes)
    rx = max(b.rx for b in boxes)
    ry = max(b.ry for b in boxes)
    return BoxChain(tuple(boxes), (lx, ly), (rx, ry), direction)


def chain_map(chain: BoxChain, S: GridCantorSet) -> PiecewiseMap:
    """Cantor transport on every box, translations through the chain's end points outside."""
    pieces = []
    for b in sorted(chain.boxes, key=lambda b: b.lx):
        plan = TransportPlan(S.block_between(b.lx, b.rx), S.block_between(b.ly, b.ry))
        pieces.append(TransportPiece(plan))
    return PiecewiseMap(pieces)


@dataclass
class CantorPerturbation:
    system: RandomSystem
    cantor: GridCantorSet
    chains: tuple  # (below chain of F0, above chain of F1)
    params: ConstructionParams
    d_m_bound: float
    attempts: int
    validity: object = None
    notes: list = field(default_factory=list)

    def descriptor(self) -> dict:
        return {
            "kind": "cantor",
            "S": self.cantor.to_dict(),
            "params": self.params.to_dict(),
            "chains": {"F0": self.chains[0].to_dict(), "F1": self.chains[1].to_dict()},
        }

    def report(self) -> dict:
        return {
            "mode": "cantor",
            "eps": self.params.eps,
            "d_m_upper_bound": self.d_m_bound,
            "d_m_below_eps": self.d_m_bound < self.params.eps,
            "attempts": self.attempts,
            "valid": bool(self.validity.ok) if self.validity is not None else None,
            "notes": list(self.notes),
        }


def perturb_cantor(F: RandomSystem, eps: float, max_retries: int = 8) -> CantorPerturbation:
    """An eps-close system whose maps leave the grid Cantor set S invariant."""
    if not eps > 0:
        raise ConstructionError("eps must be positive", step="input")
    base = choose_params(F, eps)
    last = None
    notes = []
    for attempt in range(max_retries + 1):
        params = ConstructionParams(base.R, base.M + attempt, base.M_fine + attempt, base.eps, base.eps_effective)
        try:
            S = params.cantor()
            c0 = build_boxes(F.F0, params, "below")
            c1 = build_boxes(F.F1, params, "above")
            G = RandomSystem(chain_map(c0, S), chain_map(c1, S), F.p, {"construction": "cantor", **params.to_dict()})
            report = validate(G)
            if not report.ok:
                raise ConstructionError(f"perturbed system fails {report.failed()}", step="validate")
            # a certified upper bound is all the check needs
            d_m = max(sup_distance_bounds(F.F0, G.F0, tol=eps / 8)[1], sup_distance_bounds(F.F1, G.F1, tol=eps / 8)[1])
            if not d_m < eps:
                raise ConstructionError(f"d_m bound {d_m} not below eps", step="closeness")
            return CantorPerturbation(G, S, (c0, c1), params, d_m, attempt + 1, report, notes)
        except ConstructionError as exc:
            last = exc
            notes.append(f"attempt {attempt + 1} (M={params.M}, M'={params.M_fine}): {exc} [step {exc.step}]")
    raise ConstructionError(f"construction failed after {max_retries + 1} attempts: {last}", step=getattr(last, "step", None))


def fmt(x) -> str:
    return format_number(x) if is_exact(x) else repr(x)
