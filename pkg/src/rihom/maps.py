"""Increasing homeomorphisms of the real line with translation tails.

A map is a finite chain of pieces covering ``[x_lo, x_hi]`` and equal to
``x + a_minus`` to the left and ``x + a_plus`` to the right.  Three piece kinds
exist:

* :class:`AffinePiece` with exact knots (rationals or elements of Q(sqrt 2)),
* :class:`UnitAffinePiece`, the real-line image of an affine segment of a
  piecewise-linear map of [0, 1] (exact in unit coordinates),
* :class:`TransportPiece`, a lazily refined Cantor order homeomorphism.

Evaluation is certified: ``enclose(x, tol)`` returns an interval of width at
most ``tol`` containing the true value (up to float rounding for non-exact
pieces).
"""

from __future__ import annotations

import bisect
import heapq
import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import conjugacy
from .cantor import CantorBlock, TransportPlan
from .errors import DomainError, InvalidMapError, NotExactError
from .numbers import QSqrt2, format_number, is_exact, parse_number


def _check_tol(tol):
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol!r}")


# ---------------------------------------------------------------------------
# pieces


class AffinePiece:
    kind = "affine"
    __slots__ = ("x0", "y0", "x1", "y1", "slope", "fx0", "fy0", "fx1", "fy1", "fslope")

    def __init__(self, x0, y0, x1, y1):
        if not x0 < x1:
            raise InvalidMapError(f"empty segment [{x0}, {x1}]")
        if not y0 < y1:
            raise InvalidMapError(f"segment over [{x0}, {x1}] is not increasing")
        self.x0, self.y0, self.x1, self.y1 = x0, y0, x1, y1
        self.slope = (y1 - y0) / (x1 - x0)
        self.fx0, self.fy0, self.fx1, self.fy1 = float(x0), float(y0), float(x1), float(y1)
        self.fslope = float(self.slope)

    def enclose(self, x, tol):
        y = self.fy0 + (float(x) - self.fx0) * self.fslope
        return y, y

    def exact(self, x):
        return self.y0 + (x - self.x0) * self.slope

    def inverse(self) -> "AffinePiece":
        return AffinePiece(self.y0, self.x0, self.y1, self.x1)


class UnitAffinePiece:
    """``h o l o h^-1`` for the affine l through (u0, v0), (u1, v1) in (0, 1)."""

    kind = "unit"
    __slots__ = ("u0", "v0", "u1", "v1", "s", "x0", "y0", "x1", "y1", "fx0", "fy0", "fx1", "fy1")

    def __init__(self, u0, v0, u1, v1):
        self.u0, self.v0, self.u1, self.v1 = (Fraction(t) for t in (u0, v0, u1, v1))
        if not (0 < self.u0 < self.u1 < 1 and 0 < self.v0 < self.v1 < 1):
            raise InvalidMapError("unit segment must be increasing inside (0, 1)")
        self.s = float((self.v1 - self.v0) / (self.u1 - self.u0))
        self.x0 = self.fx0 = conjugacy.h_forward(self.u0)
        self.x1 = self.fx1 = conjugacy.h_forward(self.u1)
        self.y0 = self.fy0 = conjugacy.h_forward(self.v0)
        self.y1 = self.fy1 = conjugacy.h_forward(self.v1)

    @staticmethod
    def _split(x):
        # (u, 1 - u) for u = h^-1(x), each without cancellation
        if x <= 0:
            u = 0.5 * math.exp(x)
            return u, 1.0 - u
        c = 0.5 * math.exp(-x)
        return 1.0 - c, c

    def enclose(self, x, tol):
        u, cu = self._split(float(x))
        v = float(self.v0) + self.s * (u - float(self.u0))
        if v <= 0.5:
            y = math.log(2.0 * v)
        else:
            cv = float(1 - self.v1) + self.s * (cu - float(1 - self.u1))
            y = -math.log(2.0 * cv)
        return y, y

    def exact(self, x):
        raise NotExactError("values of log-transported segments are transcendental")

    def inverse(self) -> "UnitAffinePiece":
        return UnitAffinePiece(self.v0, self.u0, self.v1, self.u1)


class TransportPiece:
    kind = "transport"
    __slots__ = ("plan", "x0", "y0", "x1", "y1", "fx0", "fy0", "fx1", "fy1")

    def __init__(self, plan: TransportPlan):
        self.plan = plan
        self.x0, self.x1 = plan.source.lo, plan.source.hi
        self.y0, self.y1 = plan.target.lo, plan.target.hi
        self.fx0, self.fx1, self.fy0, self.fy1 = float(self.x0), float(self.x1), float(self.y0), float(self.y1)

    def enclose(self, x, tol):
        if is_exact(x) and not isinstance(x, QSqrt2):
            lo, hi = self.plan.enclose_exact(x, Fraction(tol))
            return float(lo), float(hi)
        return self.plan.enclose(float(x), tol)

    def exact(self, x):
        if isinstance(x, QSqrt2):
            if not x.is_rational:
                raise NotExactError("transport images of irrational points are not exact")
            x = x.q
        return self.plan.image_exact(Fraction(x))

    def inverse(self) -> "TransportPiece":
        return TransportPiece(self.plan.inverse())


# ---------------------------------------------------------------------------
# maps


class MonotoneMap:
    """Common interface; subclasses provide ``enclose``, ``exact`` and ``inverse``."""

    left_offset = 0
    right_offset = 0

    def enclose(self, x, tol):  # pragma: no cover - abstract
        raise NotImplementedError

    def eval(self, x, tol: float = 1e-12) -> float:
        _check_tol(tol)
        lo, hi = self.enclose(x, tol)
        return 0.5 * (lo + hi)

    __call__ = eval

    def eval_array(self, xs, tol: float = 1e-12) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return np.array([self.eval(x, tol) for x in xs.ravel()]).reshape(xs.shape)

    def invert(self, y, tol: float = 1e-12) -> float:
        _check_tol(tol)
        return self.inverse().eval(y, tol)

    @property
    def is_affine(self) -> bool:
        return False

    def float_knots(self) -> list[float]:
        return []

    def tail_offsets(self) -> tuple[float, float]:
        return float(self.left_offset), float(self.right_offset)


class PiecewiseMap(MonotoneMap):
    """Chain of contiguous pieces with slope-1 tails."""

    def __init__(self, pieces: Sequence = (), offset=None):
        pieces = list(pieces)
        if not pieces:
            if offset is None:
                raise InvalidMapError("a map without pieces needs a translation offset")
            self.pieces = []
            self.left_offset = self.right_offset = offset
            self._starts = []
            return
        for a, b in zip(pieces, pieces[1:]):
            if a.x1 != b.x0 or a.y1 != b.y0:
                if not (isinstance(a.x1, float) or isinstance(b.x0, float)) or not (
                    math.isclose(a.fx1, b.fx0, abs_tol=1e-12) and math.isclose(a.fy1, b.fy0, abs_tol=1e-12)
                ):
                    raise InvalidMapError(f"pieces do not join at x = {a.x1}")
        self.pieces = pieces
        self.left_offset = pieces[0].y0 - pieces[0].x0
        self.right_offset = pieces[-1].y1 - pieces[-1].x1
        self._starts = [p.fx0 for p in pieces]

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_breakpoints(cls, points, offset=None) -> "PiecewiseMap":
        """Affine interpolation of exact knots ``[(x, y), ...]`` with slope-1 tails."""
        pts = [(parse_number(x), parse_number(y)) for x, y in points]
        if len(pts) == 1:
            x, y = pts[0]
            return cls([], offset=y - x)
        pieces = [AffinePiece(x0, y0, x1, y1) for (x0, y0), (x1, y1) in zip(pts, pts[1:])]
        if not pts:
            return cls([], offset=parse_number(offset if offset is not None else 0))
        return cls(pieces)

    # -- structure ---------------------------------------------------------
    @property
    def is_affine(self) -> bool:
        return all(p.kind == "affine" for p in self.pieces)

    @property
    def x_lo(self):
        return self.pieces[0].x0 if self.pieces else None

    @property
    def x_hi(self):
        return self.pieces[-1].x1 if self.pieces else None

    def breakpoints(self) -> list:
        if not self.pieces:
            return []
        return [(p.x0, p.y0) for p in self.pieces] + [(self.pieces[-1].x1, self.pieces[-1].y1)]

    def float_knots(self) -> list[float]:
        if not self.pieces:
            return []
        return self._starts + [self.pieces[-1].fx1]

    def _locate(self, x):
        """Index of the piece containing x, -1 for the left tail, len for the right tail."""
        if not self.pieces:
            return -1
        fx = float(x)
        if fx < self.pieces[0].fx0 or (fx == self.pieces[0].fx0 and x <= self.pieces[0].x0):
            return -1
        last = self.pieces[-1]
        if fx > last.fx1 or (fx == last.fx1 and x >= last.x1):
            return len(self.pieces)
        i = bisect.bisect_right(self._starts, fx) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        # float ties at a knot: settle exactly when possible
        p = self.pieces[i]
        if i > 0 and is_exact(x) and is_exact(p.x0) and x < p.x0:
            i -= 1
        return i

    # -- evaluation --------------------------------------------------------
    def enclose(self, x, tol=1e-12):
        i = self._locate(x)
        if i < 0:
            y = float(x) + float(self.left_offset)
            return y, y
        if i >= len(self.pieces):
            y = float(x) + float(self.right_offset)
            return y, y
        return self.pieces[i].enclose(x, tol)

    def exact(self, x):
        """Exact image of an exact point; raises NotExactError when none exists."""
        if not is_exact(x):
            raise NotExactError("exact evaluation needs an exact argument")
        i = self._locate(x)
        if i < 0:
            off = self.left_offset
        elif i >= len(self.pieces):
            off = self.right_offset
        else:
            return self.pieces[i].exact(x)
        if not is_exact(off):
            raise NotExactError("tail offset is not exact")
        return x + off

    def eval_array(self, xs, tol: float = 1e-12) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if not self.pieces:
            return xs + float(self.left_offset)
        if self.is_affine:
            kx = np.array(self.float_knots())
            ky = np.array([p.fy0 for p in self.pieces] + [self.pieces[-1].fy1])
            out = np.interp(xs, kx, ky)
            out = np.where(xs < kx[0], xs + float(self.left_offset), out)
            return np.where(xs > kx[-1], xs + float(self.right_offset), out)
        return super().eval_array(xs, tol)

    def inverse(self) -> "PiecewiseMap":
        if not self.pieces:
            return PiecewiseMap([], offset=-self.left_offset)
        return PiecewiseMap([p.inverse() for p in self.pieces])

    def shifted(self, c) -> "PiecewiseMap":
        """The map x -> F(x) + c (affine maps only)."""
        if not self.is_affine:
            raise InvalidMapError("vertical shift is implemented for affine maps")
        if not self.pieces:
            return PiecewiseMap([], offset=self.left_offset + c)
        return PiecewiseMap.from_breakpoints([(x, y + c) for x, y in self.breakpoints()])

    def mirrored(self) -> "PiecewiseMap":
        """The conjugate x -> -F(-x); swaps below- and above-diagonal maps."""
        if not self.is_affine:
            raise InvalidMapError("mirroring is implemented for affine maps")
        if not self.pieces:
            return PiecewiseMap([], offset=-self.left_offset)
        return PiecewiseMap.from_breakpoints([(-x, -y) for x, y in reversed(self.breakpoints())])

    def __repr__(self):
        kinds = ",".join(p.kind for p in self.pieces)
        return f"PiecewiseMap([{kinds}], a-={self.left_offset}, a+={self.right_offset})"


class ComposedMap(MonotoneMap):
    """Lazy ``outer o inner`` with certified enclosures."""

    def __init__(self, outer: MonotoneMap, inner: MonotoneMap):
        self.outer = outer
        self.inner = inner
        self.left_offset = outer.left_offset + inner.left_offset
        self.right_offset = outer.right_offset + inner.right_offset

    def enclose(self, x, tol=1e-12):
        t = tol
        for _ in range(60):
            a, b = self.inner.enclose(x, t)
            if a == b:
                return self.outer.enclose(a if not is_exact(x) else _exact_or(self.inner, x, a), tol)
            lo = self.outer.enclose(a, t)[0]
            hi = self.outer.enclose(b, t)[1]
            if hi - lo <= tol:
                return lo, hi
            t /= 8
        return lo, hi

    def exact(self, x):
        return self.outer.exact(self.inner.exact(x))

    def inverse(self) -> "ComposedMap":
        return ComposedMap(self.inner.inverse(), self.outer.inverse())

    def float_knots(self) -> list[float]:
        inv = self.inner.inverse()
        ks = set(self.inner.float_knots())
        ks.update(inv.eval(k) for k in self.outer.float_knots())
        return sorted(ks)


def _exact_or(m: MonotoneMap, x, fallback):
    try:
        return m.exact(x)
    except NotExactError:
        return fallback


def translation(c) -> PiecewiseMap:
    return PiecewiseMap([], offset=parse_number(c) if isinstance(c, str) else c)


def identity() -> PiecewiseMap:
    return PiecewiseMap([], offset=Fraction(0))


def compose(outer: MonotoneMap, inner: MonotoneMap) -> MonotoneMap:
    """``outer o inner``; closed form when both are affine, lazy otherwise."""
    if (
        isinstance(outer, PiecewiseMap)
        and isinstance(inner, PiecewiseMap)
        and outer.is_affine
        and inner.is_affine
        and is_exact(outer.left_offset)
        and is_exact(inner.left_offset)
    ):
        inv = inner.inverse()
        xs = {x for x, _ in inner.breakpoints()}
        xs.update(inv.exact(x) for x, _ in outer.breakpoints())
        if not xs:
            return PiecewiseMap([], offset=outer.left_offset + inner.left_offset)
        xs = sorted(xs)
        return PiecewiseMap.from_breakpoints([(x, outer.exact(inner.exact(x))) for x in xs])
    return ComposedMap(outer, inner)


# ---------------------------------------------------------------------------
# distances


def _piece_kind_at(m: MonotoneMap, x: float) -> str:
    if not isinstance(m, PiecewiseMap):
        return "other"
    i = m._locate(x)
    if i < 0 or i >= len(m.pieces):
        return "tail"
    return m.pieces[i].kind


def sup_distance_bounds(F: MonotoneMap, G: MonotoneMap, tol: float = 1e-9, budget: int = 20000):
    """Certified ``(lower, upper)`` for ``sup_x |F(x) - G(x)|``.

    Between consecutive knots of both maps the difference is monotone (affine
    against affine) or has no interior maximum (two log-transported segments,
    once both images are split at 0), so the knots and tails decide it exactly.
    Other pairings are bounded by monotone subdivision:
    ``sup_[a,b] |F - G| <= max(G(b) - F(a), F(b) - G(a))``.
    """
    aL = abs(float(F.left_offset) - float(G.left_offset))
    aR = abs(float(F.right_offset) - float(G.right_offset))
    lower = max(aL, aR)
    knots = sorted(set(F.float_knots()) | set(G.float_knots()))
    for k in knots:
        lower = max(lower, abs(F.eval(k, tol / 4) - G.eval(k, tol / 4)))
    work = []
    for a, b in zip(knots, knots[1:]):
        m = 0.5 * (a + b)
        kf, kg = _piece_kind_at(F, m), _piece_kind_at(G, m)
        simple = {"affine", "tail"}
        if (kf in simple and kg in simple) or (kf in ("unit", "tail") and kg in ("unit", "tail")):
            continue
        work.append((a, b))

    def bound_on(a, b):
        nonlocal lower
        fa, fb = F.enclose(a, tol / 4), F.enclose(b, tol / 4)
        ga, gb = G.enclose(a, tol / 4), G.enclose(b, tol / 4)
        lower = max(lower, fa[0] - ga[1], ga[0] - fa[1])
        return max(gb[1] - fa[0], fb[1] - ga[0])

    # best first: the budget always goes to the interval holding the current upper bound
    heap = [(-bound_on(a, b), a, b) for a, b in work]
    heapq.heapify(heap)
    steps = 0
    while heap:
        neg, a, b = heap[0]
        if -neg <= lower + tol or steps >= budget or b - a < 1e-14:
            break
        heapq.heappop(heap)
        m = 0.5 * (a + b)
        heapq.heappush(heap, (-bound_on(a, m), a, m))
        heapq.heappush(heap, (-bound_on(m, b), m, b))
        steps += 1
    upper = -heap[0][0] if heap else lower
    return lower, max(upper, lower)


def sup_distance(F: MonotoneMap, G: MonotoneMap, tol: float = 1e-9) -> float:
    """Certified upper bound on ``sup |F - G|``; exact for affine or log-transported maps."""
    return sup_distance_bounds(F, G, tol)[1]


# ---------------------------------------------------------------------------
# unit-interval maps


def _parse_unit_points(points) -> list[tuple[Fraction, Fraction]]:
    pts = []
    for u, v in points:
        u, v = parse_number(u), parse_number(v)
        if isinstance(u, QSqrt2) or isinstance(v, QSqrt2):
            raise InvalidMapError("unit breakpoints must be rational")
        pts.append((Fraction(u), Fraction(v)))
    if len(pts) < 2 or pts[0] != (0, 0) or pts[-1] != (1, 1):
        raise InvalidMapError("a unit map must start at (0, 0) and end at (1, 1)")
    for (u0, v0), (u1, v1) in zip(pts, pts[1:]):
        if not (u1 > u0 and v1 > v0):
            raise InvalidMapError("unit breakpoints must be strictly increasing (endpoint slopes positive and finite)")
    return pts


def _refine_at_half(pts):
    """Insert the points over u = 1/2 and u = f^-1(1/2) so no segment straddles 1/2."""
    half = Fraction(1, 2)
    out = [pts[0]]
    for (u0, v0), (u1, v1) in zip(pts, pts[1:]):
        s = (v1 - v0) / (u1 - u0)
        cuts = set()
        if u0 < half < u1:
            cuts.add(half)
        if v0 < half < v1:
            cuts.add(u0 + (half - v0) / s)
        for u in sorted(cuts):
            out.append((u, v0 + (u - u0) * s))
        out.append((u1, v1))
    return out


def transport_map(unit_points) -> PiecewiseMap:
    """Real-line conjugate ``h o f o h^-1`` of a piecewise-linear f: [0, 1] -> [0, 1].

    The first and last segments become exact translations by ``log f'(0)`` and
    ``-log f'(1)``; interior segments become :class:`UnitAffinePiece`.
    """
    pts = _refine_at_half(_parse_unit_points(unit_points))
    s0 = (pts[1][1] - pts[0][1]) / (pts[1][0] - pts[0][0])
    s1 = (pts[-1][1] - pts[-2][1]) / (pts[-1][0] - pts[-2][0])
    inner = pts[1:-1]
    if not inner:
        # identity: a single knot at 1/2 after refinement is always present
        return PiecewiseMap([], offset=math.log(float(s0)))
    pieces = [UnitAffinePiece(u0, v0, u1, v1) for (u0, v0), (u1, v1) in zip(inner, inner[1:])]
    if not pieces:
        u, v = inner[0]
        left = math.log(float(s0))
        right = -math.log(float(s1))
        if left != right:
            # one interior knot with different tails cannot happen after refinement
            raise InvalidMapError("degenerate unit map")
        return PiecewiseMap([], offset=left)
    m = PiecewiseMap(pieces)
    m.unit_points = pts
    return m


def unit_points_of(m: MonotoneMap) -> Optional[list[tuple[Fraction, Fraction]]]:
    """The exact unit breakpoints of a transported map, or None."""
    return getattr(m, "unit_points", None)


def unit_function(m: MonotoneMap):
    """Inverse transport: the map ``u -> h^-1(F(h(u)))`` of (0, 1), extended by 0 and 1."""

    def f(u):
        u = float(u)
        if u <= 0.0 or u >= 1.0:
            return u
        return conjugacy.h_inverse(m.eval(conjugacy.h_forward(u)))

    return f


def unit_eval_array(points, us) -> np.ndarray:
    """Piecewise-linear evaluation of unit breakpoints."""
    pts = _parse_unit_points(points)
    return np.interp(np.asarray(us, dtype=float), [float(u) for u, _ in pts], [float(v) for _, v in pts])


def endpoint_derivatives(m: MonotoneMap) -> tuple[float, float]:
    """``(f'(0), f'(1)) = (exp(a_minus), exp(-a_plus))``."""
    return math.exp(float(m.left_offset)), math.exp(-float(m.right_offset))


# ---------------------------------------------------------------------------
# serialization


def _num(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return format_number(x)


def map_to_dict(m: MonotoneMap) -> dict:
    if not isinstance(m, PiecewiseMap):
        raise InvalidMapError("only piecewise maps are serializable")
    if unit_points_of(m) is not None:
        return {"unit_breakpoints": [[_num(u), _num(v)] for u, v in m.unit_points]}
    if not m.pieces:
        return {"breakpoints": [], "offset": _num(m.left_offset)}
    d = {"breakpoints": [[_num(x), _num(y)] for x, y in m.breakpoints()]}
    transports = []
    for i, p in enumerate(m.pieces):
        if p.kind == "transport":
            transports.append({"index": i, "source": p.plan.source.to_dict(), "target": p.plan.target.to_dict()})
        elif p.kind == "unit":
            d.setdefault("unit_segments", []).append(
                {"index": i, "unit": [[_num(p.u0), _num(p.v0)], [_num(p.u1), _num(p.v1)]]}
            )
    if transports:
        d["transport_segments"] = transports
    return d


def map_from_dict(d: dict) -> PiecewiseMap:
    try:
        if "unit_breakpoints" in d:
            return transport_map(d["unit_breakpoints"])
        bps = d["breakpoints"]
        if not bps:
            return PiecewiseMap([], offset=parse_number(d.get("offset", "0")))
        pts = [(parse_number(x), parse_number(y)) for x, y in bps]
        pieces = [None] * (len(pts) - 1)
        for t in d.get("transport_segments", []):
            plan = TransportPlan(CantorBlock.from_dict(t["source"]), CantorBlock.from_dict(t["target"]))
            pieces[int(t["index"])] = TransportPiece(plan)
        for t in d.get("unit_segments", []):
            (u0, v0), (u1, v1) = t["unit"]
            pieces[int(t["index"])] = UnitAffinePiece(parse_number(u0), parse_number(v0), parse_number(u1), parse_number(v1))
        for i, p in enumerate(pieces):
            if p is None:
                (x0, y0), (x1, y1) = pts[i], pts[i + 1]
                pieces[i] = AffinePiece(x0, y0, x1, y1)
        return PiecewiseMap(pieces)
    except (KeyError, TypeError, IndexError) as exc:
        raise InvalidMapError(f"malformed map description: {exc}") from exc
