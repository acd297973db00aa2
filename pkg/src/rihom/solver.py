"""Certified stationary CDFs by stochastic-order bracketing.

Two atomic chains run on a grid ``origin + k*g``.  The upper-CDF chain starts
at the far-left window edge and rounds every image down to the grid; the
lower-CDF chain starts at the far-right edge and rounds up.  Increasing maps
preserve stochastic order and the Markov operator is one-sidedly
nonexpansive in the sup norm of CDFs, so with ``tau_l``, ``tau_r`` the
certified stationary masses beyond the edges,

    lower(x) - tau_r <= F_mu(x) <= upper(x) + tau_l     for every n.

Rounding uses exact rational arithmetic wherever a grid point could be hit
exactly, so atoms of Cantor-supported systems stay inside the invariant set.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .cantor import GridCantorSet, _surviving_lefts, cover_cells
from .conjugacy import h_inverse_array
from .errors import DomainError
from .maps import MonotoneMap, PiecewiseMap
from .markov import AtomicMeasure, Staircase, TailCertificate, tail_certificate
from .numbers import QSqrt2, floor_div, is_exact
from .systems import RandomSystem, lyapunov


def _floor_exact(v, g: Fraction) -> int:
    return floor_div(v, g) if isinstance(v, QSqrt2) else math.floor(Fraction(v) / g)


def _ceil_exact(v, g: Fraction) -> int:
    return -_floor_exact(-v, g)


def _enclose_index(plan, origin: Fraction, g: Fraction, k: int) -> tuple[int, int]:
    lo, hi = plan.enclose_exact(origin + k * g, g)
    return _floor_exact(lo - origin, g), _ceil_exact(hi - origin, g)


def _power_of_three(r: Fraction) -> Optional[int]:
    if r.denominator != 1 or r < 1:
        return None
    n, e = r.numerator, 0
    while n % 3 == 0:
        n //= 3
        e += 1
    return e if n == 1 else None


class TransportIndexer:
    """Exact rounded images of grid points under a run of transport pieces sharing one grid Cantor set.

    Needs a grid of spacing ``cell_width / 3^D`` aligned with the cells.  A
    grid point is then a matched gap endpoint, inside a matched gap, or a cell
    boundary.  On a matched gap the map is affine with slope a power of 3, so
    floor and ceil reduce to integer divisions on the depth-D matching; cell
    boundaries (few) go through the exact tree.
    """

    max_level = 30  # keeps level coordinates inside int64

    def __init__(self, pieces, origin: Fraction, g: Fraction):
        if not pieces or any(p.kind != "transport" for p in pieces):
            raise ValueError("only transport pieces")
        S = pieces[0].plan.source.cantor
        D = _power_of_three(S.cell_width / g)
        shift = (origin - S.origin) / g
        if D is None or shift.denominator != 1 or any(p.plan.source.cantor != S or p.plan.target.cantor != S for p in pieces):
            raise ValueError("grid not aligned with the Cantor cells")
        self.origin, self.g = origin, g
        matchings = [p.plan.int_matching(D) for p in pieces]
        E = max(m.level for m in matchings)
        if E > self.max_level:
            raise ValueError("matching too deep for integer coordinates")
        cols = [[], [], [], [], []]
        for m in matchings:
            up = 3 ** (E - m.level)
            sl = np.array(m.source_left, dtype=np.int64) * up
            sr = np.array(m.source_right, dtype=np.int64) * up
            tl = np.array(m.target_left, dtype=np.int64) * up
            tr = np.array(m.target_right, dtype=np.int64) * up
            ratio = np.rint(np.log((tr - tl) / (sr - sl)) / math.log(3)).astype(np.int64)
            for c, v in zip(cols, (sl, sr, tl, tr, ratio)):
                c.append(v)
        self.SL, self.SR, self.TL, self.TR, self.expo = (np.concatenate(c) for c in cols)
        order = np.argsort(self.SL, kind="stable")
        self.SL, self.SR, self.TL, self.TR, self.expo = (v[order] for v in (self.SL, self.SR, self.TL, self.TR, self.expo))
        self.F = 3 ** (E - D)
        self.off = int(shift) * self.F

    def __call__(self, ks: np.ndarray, up: bool) -> tuple[np.ndarray, np.ndarray]:
        """Rounded images and the mask of points inside matched gaps (others are left unset)."""
        n = ks * self.F + self.off
        pos = np.searchsorted(self.SL, n, side="right") - 1
        i = np.clip(pos, 0, None)
        inside = (pos >= 0) & (n <= self.SR[i])
        out = np.empty_like(ks)
        j = i[inside]
        d = n[inside] - self.SL[j]
        e = self.expo[j]
        pos_e = np.maximum(e, 0)
        q = 3 ** np.maximum(-e, 0)
        # image offset inside the target gap: d*3^e, floored or ceiled when e < 0
        t = np.where(e >= 0, d * 3**pos_e, (-np.floor_divide(-d, q)) if up else np.floor_divide(d, q))
        A = self.TL[j] - self.off + t
        out[inside] = -np.floor_divide(-A, self.F) if up else np.floor_divide(A, self.F)
        return out, inside


class GridStepper:
    """Images of grid indices under one map, rounded down and up to the grid."""

    near = 1e-7  # fractional parts this close to an integer are settled exactly

    def __init__(self, m: MonotoneMap, origin: Fraction, g: Fraction):
        self.m = m
        self.origin = Fraction(origin)
        self.g = Fraction(g)
        self.fo = float(self.origin)
        self.fg = float(self.g)
        self._cache: dict[int, tuple[int, int]] = {}
        self._coeffs: dict = {}
        self.piecewise = isinstance(m, PiecewiseMap)
        self.indexer = None
        if self.piecewise:
            self._prepare()
            try:
                self.indexer = TransportIndexer(m.pieces, self.origin, self.g)
            except ValueError:
                pass

    def _prepare(self):
        m = self.m
        knots = [p.x0 for p in m.pieces] + ([m.pieces[-1].x1] if m.pieces else [])
        thr = []
        for k in knots:
            if is_exact(k):
                thr.append(_floor_exact(k - self.origin, self.g))
            else:
                thr.append(math.floor((k - self.fo) / self.fg))
        self.thresholds = np.array(thr, dtype=np.int64)
        self.tail_shift = []
        for off in (m.left_offset, m.right_offset):
            if is_exact(off) and not isinstance(off, QSqrt2):
                q = Fraction(off) / self.g
                self.tail_shift.append(int(q) if q.denominator == 1 else None)
            else:
                self.tail_shift.append(None)

    def _exact_index(self, k: int, up: bool) -> int:
        x = self.origin + k * self.g
        y = self.m.exact(x)
        return _ceil_exact(y - self.origin, self.g) if up else _floor_exact(y - self.origin, self.g)

    def _round(self, t: np.ndarray, ks: np.ndarray, up: bool, exact_ok: bool) -> np.ndarray:
        out = np.ceil(t) if up else np.floor(t)
        out = out.astype(np.int64)
        if exact_ok:
            frac = np.abs(t - np.round(t))
            for j in np.nonzero(frac < self.near)[0]:
                out[j] = self._exact_index(int(ks[j]), up)
        return out

    def step(self, ks: np.ndarray, up: bool) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        if not self.piecewise:
            return self._generic(ks, up)
        m = self.m
        out = np.empty_like(ks)
        if not m.pieces:
            return self._tail(ks, 0, up)
        slot = np.searchsorted(self.thresholds, ks, side="left")
        n = len(m.pieces)
        left = slot == 0
        right = slot == n + 1
        if left.any():
            out[left] = self._tail(ks[left], 0, up)
        if right.any():
            out[right] = self._tail(ks[right], 1, up)
        inner = np.nonzero(~(left | right))[0]
        if self.indexer is not None and len(inner):
            vals, inside = self.indexer(ks[inner], up)
            out[inner[inside]] = vals[inside]
            inner = inner[~inside]
        if len(inner):
            # group by piece without a pass over all atoms per piece
            order = inner[np.argsort(slot[inner], kind="stable")]
            sl = slot[order]
            cuts = np.nonzero(np.diff(sl))[0] + 1
            for grp in np.split(order, cuts):
                out[grp] = self._piece(m.pieces[slot[grp[0]] - 1], ks[grp], up)
        return out

    def _affine_coeffs(self, p):
        """Integers (P, Q, den) with image index ``(P + k*Q) / den`` for a rational affine piece, or None."""
        key = id(p)
        if key not in self._coeffs:
            r = None
            if all(isinstance(v, (int, Fraction)) for v in (p.x0, p.y0, p.x1, p.y1)):
                s = Fraction(p.slope)
                c = (Fraction(p.y0) - self.origin - (Fraction(p.x0) - self.origin) * s) / self.g
                den = c.denominator * s.denominator // math.gcd(c.denominator, s.denominator)
                P, Q = int(c * den), int(s * den)
                reach = abs(P) + 2**40 * abs(Q)  # indices stay far below 2^40
                if reach < 2**62:
                    r = (P, Q, den)
            self._coeffs[key] = r
        return self._coeffs[key]

    def _tail(self, ks, side, up):
        shift = self.tail_shift[side]
        if shift is not None:
            return ks + shift
        off = self.m.left_offset if side == 0 else self.m.right_offset
        t = ks + float(off) / self.fg
        return self._round(t, ks, up, is_exact(off))

    def _piece(self, p, ks, up):
        if p.kind == "transport":
            return self._transport(p, ks, up)
        xs = self.fo + ks * self.fg
        if p.kind == "affine":
            coeff = self._affine_coeffs(p)
            if coeff is not None:
                P, Q, den = coeff
                num = P + ks * Q
                return -np.floor_divide(-num, den) if up else np.floor_divide(num, den)
            ys = p.fy0 + (xs - p.fx0) * p.fslope
            return self._round((ys - self.fo) / self.fg, ks, up, True)
        ys = np.array([p.enclose(x, 0)[0] for x in xs])
        return self._round((ys - self.fo) / self.fg, ks, up, False)

    def _transport(self, p, ks, up):
        out = np.empty_like(ks)
        for j, k in enumerate(ks.tolist()):
            r = self._cache.get(k)
            if r is None:
                r = self._cache[k] = _enclose_index(p.plan, self.origin, self.g, k)
            out[j] = r[1] if up else r[0]
        return out

    def _generic(self, ks, up):
        out = np.empty_like(ks)
        for j, k in enumerate(ks.tolist()):
            lo, hi = self.m.enclose(self.fo + k * self.fg, self.fg)
            t = ((hi if up else lo) - self.fo) / self.fg
            out[j] = math.ceil(t) if up else math.floor(t)
        return out


class _Chain:
    """Atomic measure on grid indices."""

    def __init__(self, k: int):
        self.ks = np.array([k], dtype=np.int64)
        self.ws = np.array([1.0])

    def step(self, s0: GridStepper, s1: GridStepper, p: float, up: bool, keep: Optional[tuple] = None):
        k = np.concatenate([s0.step(self.ks, up), s1.step(self.ks, up)])
        w = np.concatenate([p * self.ws, (1 - p) * self.ws])
        uniq, inv = np.unique(k, return_inverse=True)
        self.ks = uniq
        self.ws = np.bincount(inv, weights=w, minlength=len(uniq))
        if keep is not None:
            self._clamp(*keep, up)

    def _clamp(self, k_lo: int, k_hi: int, bins: tuple, up: bool):
        """Coarsen the atoms outside [k_lo, k_hi], moving mass only in the chain's rounding direction.

        Beyond the edge the chain rounds toward (right edge of the upper-CDF
        chain, left edge of the lower one) everything merges into the atom
        nearest the window.  Beyond the other edge atoms are binned to
        multiples of ``bins`` grid steps, which costs a drift of at most one
        bin per step on mass that is certified to be tiny.
        """
        ks, ws = self.ks, self.ws
        a = np.searchsorted(ks, k_lo, side="left")
        b = np.searchsorted(ks, k_hi, side="right")
        if up:
            if a > 1:
                ks = np.concatenate([ks[a - 1 : a], ks[a:]])
                ws = np.concatenate([[ws[:a].sum()], ws[a:]])
                b -= a - 1
            tail = ks[b:]
            if len(tail):
                binned = k_hi + ((tail - k_hi + bins[1] - 1) // bins[1]) * bins[1]
                uniq, inv = np.unique(binned, return_inverse=True)
                ks = np.concatenate([ks[:b], uniq])
                ws = np.concatenate([ws[:b], np.bincount(inv, weights=ws[b:], minlength=len(uniq))])
        else:
            if b < len(ks) - 1:
                ks = np.concatenate([ks[:b], ks[b : b + 1]])
                ws = np.concatenate([ws[:b], [ws[b:].sum()]])
            head = ks[:a]
            if len(head):
                binned = k_lo - ((k_lo - head + bins[0] - 1) // bins[0]) * bins[0]
                uniq, inv = np.unique(binned, return_inverse=True)
                ks = np.concatenate([uniq, ks[a:]])
                ws = np.concatenate([np.bincount(inv, weights=ws[:a], minlength=len(uniq)), ws[a:]])
        self.ks, self.ws = ks, ws

    def refine(self, factor: int):
        self.ks = self.ks * factor

    def cdf_at(self, ks: np.ndarray) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(self.ws)])
        return c[np.searchsorted(self.ks, ks, side="right")]


def _gap(a: _Chain, b: _Chain) -> float:
    ks = np.union1d(a.ks, b.ks)
    return float(np.max(np.abs(a.cdf_at(ks) - b.cdf_at(ks))))


@dataclass
class CdfEnvelope:
    """Bracket of a stationary CDF.

    ``upper_chain``/``lower_chain`` are the two atomic measures; the true CDF
    lies in ``[lower - tau_right, upper + tau_left]`` where ``lower`` and
    ``upper`` are their pointwise minimum and maximum.
    """

    upper_chain: AtomicMeasure
    lower_chain: AtomicMeasure
    tau_left: float
    tau_right: float
    certificates: tuple
    window: tuple[float, float]
    origin: Fraction
    grid: Fraction
    iterations: int
    gap: float
    converged: bool
    tol: float
    history: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def tau(self) -> float:
        return max(self.tau_left, self.tau_right)

    @property
    def error(self) -> float:
        return self.gap + 2 * self.tau

    def _grid(self) -> np.ndarray:
        return np.union1d(self.upper_chain.positions, self.lower_chain.positions)

    def _pair(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if "pair" not in self._cache:
            xs = self._grid()
            # cumulative sums can overshoot 1 by rounding
            a = np.clip(self.upper_chain.cdf()(xs), 0.0, 1.0)
            b = np.clip(self.lower_chain.cdf()(xs), 0.0, 1.0)
            self._cache["pair"] = (xs, a, b)
        return self._cache["pair"]

    def lower(self) -> Staircase:
        if "lower" not in self._cache:
            xs, a, b = self._pair()
            self._cache["lower"] = Staircase(xs, np.minimum(a, b))
        return self._cache["lower"]

    def upper(self) -> Staircase:
        if "upper" not in self._cache:
            xs, a, b = self._pair()
            self._cache["upper"] = Staircase(xs, np.maximum(a, b))
        return self._cache["upper"]

    def midpoint(self) -> Staircase:
        xs, a, b = self._pair()
        return Staircase(xs, 0.5 * (a + b))

    def bounds(self, x) -> tuple:
        """Certified bounds on the true CDF at x."""
        lo = np.maximum(self.lower()(x) - self.tau_right, 0.0)
        hi = np.minimum(self.upper()(x) + self.tau_left, 1.0)
        return lo, hi

    def max_atom_weight(self) -> float:
        return float(max(self.upper_chain.weights.max(), self.lower_chain.weights.max()))

    def interval_mass_bounds(self, a, b) -> tuple[float, float]:
        """Certified (lower, upper) bounds on the true mass of (a, b]."""
        L, U = self.lower(), self.upper()
        lo = L(b) - self.tau_right - (U(a) + self.tau_left)
        hi = U(b) + self.tau_left - (L(a) - self.tau_right)
        return max(0.0, float(lo)), min(1.0, float(hi))

    def certificate_header(self) -> list[str]:
        lines = [
            f"# tol={self.tol!r} gap={self.gap!r} tau_left={self.tau_left!r} tau_right={self.tau_right!r}",
            f"# converged={self.converged} iterations={self.iterations} grid={self.grid} origin={self.origin}",
            f"# window=[{self.window[0]!r}, {self.window[1]!r}]",
        ]
        for c in self.certificates:
            lines.append(
                f"# certificate side={c.side} M={c.M!r} alpha={c.alpha!r} x0={c.x0!r} "
                f"lambda0={c.lam0!r} lambda1={c.lam1!r} xi={c.xi0!r} delta={c.delta!r}"
            )
        return lines

    def to_csv(self, stream=None, max_rows: Optional[int] = None) -> str:
        """Rows ``x_real, x_unit, cdf_lower, cdf_upper`` after a commented certificate header."""
        xs = self._grid()
        if max_rows is not None and len(xs) > max_rows:
            xs = xs[np.linspace(0, len(xs) - 1, max_rows).round().astype(int)]
        lo, hi = self.lower()(xs), self.upper()(xs)
        buf = io.StringIO()
        for line in self.certificate_header():
            buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_real", "x_unit", "cdf_lower", "cdf_upper"])
        xu = h_inverse_array(xs)
        for row in zip(xs, xu, lo, hi):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def _bins(lyap, g: Fraction) -> tuple[int, int]:
    """Bin widths (grid steps) outside the window: at most an eighth of the drift back toward it."""
    fg = float(g)
    return max(1, int(lyap.lambda_minus / (8 * fg))), max(1, int(lyap.lambda_plus / (8 * fg)))


def _default_grid(tol: float, cantor: Optional[GridCantorSet]):
    if cantor is not None:
        return cantor.origin, cantor.cell_width / 3**8, 3
    # the stalled gap is about one grid step on the systems tried
    return Fraction(0), Fraction(1, 2 ** max(8, math.ceil(math.log2(2 / tol)))), 2


def stationary_solve(
    system: RandomSystem,
    tol: float,
    *,
    cantor: Optional[GridCantorSet] = None,
    grid: Optional[Fraction] = None,
    origin: Optional[Fraction] = None,
    tail_mass: Optional[float] = None,
    max_iterations: int = 20000,
    stall_window: int = 50,
    max_refinements: int = 6,
    check_every: int = 5,
    record_history: bool = False,
) -> CdfEnvelope:
    """Bracket the unique stationary CDF to within ``tol`` (certified).

    For a Cantor-supported system pass its ``cantor`` set; the grid is then
    aligned with the cells and refined by thirds so atoms stay in the set.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    d_origin, d_grid, factor = _default_grid(tol, cantor)
    origin = Fraction(origin) if origin is not None else d_origin
    g = Fraction(grid) if grid is not None else d_grid
    if tail_mass is None:
        tail_mass = tol / 10
    left_cert, right_cert = tail_certificate(system)
    w_lo = left_cert.window_edge(tail_mass)
    w_hi = right_cert.window_edge(tail_mass)
    align = cantor.cell_width if cantor is not None else g
    k_lo = math.floor((Fraction(w_lo) - origin) / align) * int(align / g)
    k_hi = math.ceil((Fraction(w_hi) - origin) / align) * int(align / g)
    x_lo = float(origin + k_lo * g)
    x_hi = float(origin + k_hi * g)
    tau_l = left_cert.tail_mass(x_lo)
    tau_r = right_cert.tail_mass(x_hi)
    tau = max(tau_l, tau_r)

    p = float(system.p)
    lyap = lyapunov(system)
    up_chain, lo_chain = _Chain(k_lo), _Chain(k_hi)
    s0, s1 = GridStepper(system.F0, origin, g), GridStepper(system.F1, origin, g)
    best = math.inf
    best_at = 0
    refinements = 0
    gap = 1.0
    scale = 1  # grid refinement relative to the window indices
    history = []
    it = 0
    converged = False
    while it < max_iterations:
        keep = (k_lo * scale, k_hi * scale, _bins(lyap, g))
        up_chain.step(s0, s1, p, up=False, keep=keep)
        lo_chain.step(s0, s1, p, up=True, keep=keep)
        it += 1
        if it % check_every:
            continue
        gap = _gap(up_chain, lo_chain)
        if record_history:
            history.append((it, gap, g))
        if gap + 2 * tau <= tol:
            converged = True
            break
        if gap < best * 0.98:
            best, best_at = gap, it
        elif it - best_at >= stall_window and refinements < max_refinements:
            g = g / factor
            up_chain.refine(factor)
            lo_chain.refine(factor)
            s0, s1 = GridStepper(system.F0, origin, g), GridStepper(system.F1, origin, g)
            refinements += 1
            scale *= factor
            best, best_at = gap, it

    fo, fg = float(origin), float(g)
    upper = AtomicMeasure(fo + up_chain.ks * fg, up_chain.ws, normalize=False)
    lower = AtomicMeasure(fo + lo_chain.ks * fg, lo_chain.ws, normalize=False)
    env = CdfEnvelope(
        upper, lower, tau_l, tau_r, (left_cert, right_cert), (x_lo, x_hi), origin, g, it, gap, converged, tol, history
    )
    env.index_chains = (up_chain, lo_chain)  # exact grid indices
    return env


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class CoverMass:
    mass_lower: float
    length: Fraction
    window_length: Fraction
    depth: int
    cells: int

    @property
    def length_factor(self) -> Fraction:
        return self.length / self.window_length


def _chain_mass_in(env: CdfEnvelope, intervals) -> float:
    """Smallest mass either chain puts into a union of disjoint closed intervals (exact grid comparison)."""
    masses = []
    for chain in env.index_chains:
        ks = chain.ks
        total = 0.0
        c = np.concatenate([[0.0], np.cumsum(chain.ws)])
        for a, b in intervals:
            ka = math.ceil((a - env.origin) / env.grid)
            kb = math.floor((b - env.origin) / env.grid)
            i = np.searchsorted(ks, ka, side="left")
            j = np.searchsorted(ks, kb, side="right")
            total += c[j] - c[i]
        masses.append(total)
    return float(min(masses))


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _cover_index_ranges(env: CdfEnvelope, block, depth: int):
    """Grid index ranges [ka, kb] of the cover intervals, or None when cells are not whole grid multiples."""
    S = block.cantor
    W = S.cell_width / env.grid
    O = (S.origin - env.origin) / env.grid
    if W.denominator != 1 or O.denominator != 1:
        return None
    W, O = int(W), int(O)
    piece = Fraction(1, 3**depth)
    lefts = _surviving_lefts(depth)
    lo_off = np.array([math.ceil(a * W) for a in lefts], dtype=object)
    hi_off = np.array([math.floor((a + piece) * W) for a in lefts], dtype=object)
    base = O + W * np.arange(block.start_cell, block.start_cell + block.cell_count, dtype=object)
    ka = (base[:, None] + lo_off[None, :]).ravel()
    kb = (base[:, None] + hi_off[None, :]).ravel()
    if max(abs(ka[0]), abs(kb[-1])) < 2**62:
        ka, kb = ka.astype(np.int64), kb.astype(np.int64)
    return ka, kb


def _chain_mass_in_ranges(env: CdfEnvelope, ka, kb) -> float:
    """As _chain_mass_in for sorted index ranges that are disjoint or share an end point."""
    masses = []
    for chain in env.index_chains:
        c = np.concatenate([[0.0], np.cumsum(chain.ws)])
        ks = chain.ks.astype(object) if ka.dtype == object and chain.ks.dtype != object else chain.ks
        i = np.searchsorted(ks, ka, side="left")
        j = np.searchsorted(ks, kb, side="right")
        # an atom on a shared end point counts once
        i[1:] = np.maximum(i[1:], j[:-1])
        j = np.maximum(i, j)
        masses.append(float(np.sum(c[j] - c[i])))
    return float(min(masses))


def cover_mass(env: CdfEnvelope, S: GridCantorSet, depth: int, window: Optional[tuple] = None) -> CoverMass:
    """Mass of the envelope chains inside the depth-``depth`` cover of S within a window of whole cells.

    The cover consists of the 2^depth closed generation-``depth`` intervals of
    every cell; its length is exactly ``cells * cell_width * (2/3)^depth``.
    The reported mass is the smaller of the two chains' masses, which are
    within the envelope error of the true stationary CDF.
    """
    if window is None:
        window = env.window
    c0 = S.cell_of(Fraction(window[0]))
    c1 = math.ceil(S.to_cell_units(Fraction(window[1])))
    block = S.block(c0, c1 - c0)
    length = block.cell_count * S.cell_width * Fraction(2, 3) ** depth
    ranges = _cover_index_ranges(env, block, depth)
    if ranges is not None:
        mass = _chain_mass_in_ranges(env, *ranges)
    else:
        intervals = _merge(cover_cells(block, depth)) if depth > 0 else [(block.lo, block.hi)]
        mass = _chain_mass_in(env, intervals)
    return CoverMass(mass, length, block.cell_count * S.cell_width, depth, block.cell_count)


def support_grid_mass(env: CdfEnvelope, window: tuple[float, float], n_cells: int) -> list[tuple[float, float, float, float]]:
    """Per-cell ``(a, b, mass_lower, mass_upper)`` for cells (a, b] splitting the window evenly."""
    edges = np.linspace(float(window[0]), float(window[1]), n_cells + 1)
    return [(float(a), float(b), *env.interval_mass_bounds(a, b)) for a, b in zip(edges, edges[1:])]
