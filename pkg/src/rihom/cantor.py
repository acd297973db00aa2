"""Grid Cantor sets and order homeomorphisms between finite unions of their cells.

A :class:`GridCantorSet` cuts the real line into closed cells of equal width
and builds a middle-thirds Cantor set on each.  A :class:`CantorBlock` is a run
of adjacent cells; its intersection with the set is again a Cantor set whose
gaps are exactly the middle-thirds gaps of its cells.

:func:`order_homeo` pairs the gaps of two blocks by back-and-forth matching.
At every step the next unmatched gap is the one of least generation (leftmost
on ties), and it is matched to the least-generation, leftmost gap on the other
side that keeps the order.  Inside the region between two consecutive matched
pairs this selects the simplest gap on *both* sides, whichever side moves, so
the global matching coincides with the recursive one computed here: every
region is split at the pair (simplest gap of A-part, simplest gap of B-part).
Regions are refined lazily, which makes evaluation local and exact.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

from .errors import DomainError, NotExactError
from .numbers import QSqrt2


class Gap(NamedTuple):
    left: Fraction
    right: Fraction
    generation: int

    @property
    def length(self) -> Fraction:
        return self.right - self.left


@dataclass(frozen=True)
class GridCantorSet:
    """``S = union over z of (C + z*cell_width + origin)`` with C middle-thirds on [0, cell_width]."""

    cell_width: Fraction
    origin: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "cell_width", Fraction(self.cell_width))
        object.__setattr__(self, "origin", Fraction(self.origin))
        if self.cell_width <= 0:
            raise DomainError("cell_width must be positive")

    def cell_of(self, x) -> int:
        return math.floor((Fraction(x) - self.origin) / self.cell_width)

    def cell_start(self, c: int) -> Fraction:
        return self.origin + c * self.cell_width

    def to_cell_units(self, x) -> Fraction:
        return (Fraction(x) - self.origin) / self.cell_width

    def triadic_units(self, x) -> Optional[tuple[int, int]]:
        """(n, e) with x in cell units equal to n / 3^e in lowest terms, or None if not triadic."""
        x = Fraction(x)
        o, w = self.origin, self.cell_width
        num = (x.numerator * o.denominator - o.numerator * x.denominator) * w.denominator
        den = x.denominator * o.denominator * w.numerator
        g = math.gcd(num, den)
        return _triadic(Fraction(num // g, den // g, _normalize=False))

    def from_cell_units(self, t) -> Fraction:
        return self.origin + Fraction(t) * self.cell_width

    def block(self, start_cell: int, cell_count: int) -> "CantorBlock":
        return CantorBlock(self, start_cell, cell_count)

    def block_between(self, lo, hi) -> "CantorBlock":
        """The block whose hull is [lo, hi]; both must be cell endpoints."""
        a = self.to_cell_units(lo)
        b = self.to_cell_units(hi)
        if a.denominator != 1 or b.denominator != 1 or b <= a:
            raise DomainError(f"[{lo}, {hi}] is not a nonempty union of cells")
        return CantorBlock(self, int(a), int(b - a))

    def contains(self, x) -> bool:
        return membership(self, x)

    def to_dict(self) -> dict:
        return {"cell_width": str(self.cell_width), "origin": str(self.origin)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridCantorSet":
        return cls(Fraction(d["cell_width"]), Fraction(d.get("origin", "0")))


@dataclass(frozen=True)
class CantorBlock:
    cantor: GridCantorSet
    start_cell: int
    cell_count: int

    def __post_init__(self):
        if self.cell_count < 1:
            raise DomainError("a Cantor block needs at least one cell")

    @property
    def lo(self) -> Fraction:
        return self.cantor.cell_start(self.start_cell)

    @property
    def hi(self) -> Fraction:
        return self.cantor.cell_start(self.start_cell + self.cell_count)

    def translate(self, cells: int) -> "CantorBlock":
        return CantorBlock(self.cantor, self.start_cell + cells, self.cell_count)

    def to_dict(self) -> dict:
        return {"start_cell": self.start_cell, "cell_count": self.cell_count, **self.cantor.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "CantorBlock":
        return cls(GridCantorSet.from_dict(d), int(d["start_cell"]), int(d["cell_count"]))


# ---------------------------------------------------------------------------
# membership and gaps


_CHUNK = 10
_CHUNK_BASE = 3**_CHUNK
# chunk values whose ternary digits are all 0 or 2
_NO_ONES = frozenset(sum(2 * 3**i for i in range(_CHUNK) if b >> i & 1) for b in range(2**_CHUNK))


def _triadic_in_cantor(n: int, e: int) -> bool:
    """Membership of n / 3^e in [0, 1]: every ternary digit but the last avoids 1 (a final 1 reads as 0222...)."""
    if n < 0 or n > _pow3(e):
        return False
    if n == _pow3(e):
        return True
    n //= 3
    while n:
        n, d = divmod(n, _CHUNK_BASE)
        if d not in _NO_ONES:
            return False
    return True


def in_middle_thirds(u: Fraction) -> bool:
    """Exact membership of a rational u in the middle-thirds set on [0, 1].

    Iterates the expanding maps 3u and 3u - 2; a rational orbit is eventually
    periodic, so either it enters an open middle third or it cycles.
    """
    u = Fraction(u)
    if u < 0 or u > 1:
        return False
    t = _triadic(u)
    if t is not None:
        return _triadic_in_cantor(*t)
    seen = set()
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    while u not in seen:
        seen.add(u)
        if third < u < two_thirds:
            return False
        u = 3 * u if u <= third else 3 * u - 2
    return True


def membership(S: GridCantorSet, x) -> bool:
    """Exact decision of x in S for rational x."""
    if isinstance(x, QSqrt2):
        if not x.is_rational:
            raise DomainError("membership is decidable only for rational points")
        x = x.q
    if isinstance(x, float):
        x = Fraction(x)
    t = S.triadic_units(x)
    if t is not None:
        n, e = t
        return _triadic_in_cantor(n % _pow3(e), e)
    t = S.to_cell_units(x)
    return in_middle_thirds(t - math.floor(t))


def gaps(block: CantorBlock, generation: int) -> list[Gap]:
    """Gaps of one generation, left to right; each cell holds 2^(d-1) of them."""
    if generation < 1:
        raise DomainError("generation must be at least 1")
    d = generation
    scale = Fraction(1, 3**d)
    out = []
    for c in range(block.start_cell, block.start_cell + block.cell_count):
        for left_in_cell in _surviving_lefts(d - 1):
            a = left_in_cell + scale
            out.append(
                Gap(
                    block.cantor.from_cell_units(c + a),
                    block.cantor.from_cell_units(c + a + scale),
                    d,
                )
            )
    return out


def _surviving_lefts(level: int) -> list[Fraction]:
    """Left endpoints (cell units) of the 2^level intervals kept after `level` steps."""
    lefts = [Fraction(0)]
    for k in range(1, level + 1):
        step = Fraction(2, 3**k)
        lefts = [v for a in lefts for v in (a, a + step)]
    return lefts


def cover_cells(block: CantorBlock, depth: int) -> list[tuple[Fraction, Fraction]]:
    """The 2^depth closed subintervals of generation `depth` in every cell of the block."""
    length = Fraction(1, 3**depth)
    lefts = _surviving_lefts(depth)
    out = []
    for c in range(block.start_cell, block.start_cell + block.cell_count):
        for a in lefts:
            out.append((block.cantor.from_cell_units(c + a), block.cantor.from_cell_units(c + a + length)))
    return out


_LOG2_3 = math.log2(3)


def _triadic(u: Fraction) -> Optional[tuple[int, int]]:
    """(n, e) with u = n / 3^e, or None if the denominator is not a power of 3."""
    d = u.denominator
    guess = int((d.bit_length() - 1) / _LOG2_3)
    for e in (guess, guess + 1, guess - 1):
        if e >= 0 and _pow3(e) == d:
            return u.numerator, e
    return None


def _least_gap_in_cell(u_lo: Fraction, u_hi: Fraction) -> Optional[tuple[Fraction, int]]:
    """Simplest gap (left end, generation) inside [u_lo, u_hi] within the unit cell.

    u_lo and u_hi must be points of the Cantor set (cell units).  Triadic
    inputs, the only ones arising from gap endpoints, run in integer arithmetic.
    """
    if u_lo >= u_hi:
        return None
    lo_t, hi_t = _triadic(u_lo), _triadic(u_hi)
    if lo_t is None or hi_t is None:
        return _least_gap_in_cell_slow(u_lo, u_hi)
    E = max(lo_t[1], hi_t[1])
    U_lo = lo_t[0] * 3 ** (E - lo_t[1])
    U_hi = hi_t[0] * 3 ** (E - hi_t[1])
    A, k = 0, 0  # current interval [A/3^k, (A+1)/3^k]
    while True:
        if k + 1 > E:
            U_lo, U_hi, E = 3 * U_lo, 3 * U_hi, E + 1
        scale = 3 ** (E - k - 1)
        g_l = (3 * A + 1) * scale
        g_r = g_l + scale
        if U_lo <= g_l and U_hi >= g_r:
            return Fraction(3 * A + 1, 3 ** (k + 1)), k + 1
        if U_hi <= g_l:
            A = 3 * A
        elif U_lo >= g_r:
            A = 3 * A + 2
        else:
            raise DomainError("region endpoint lies inside a gap")
        k += 1


def _least_gap_in_cell_slow(u_lo: Fraction, u_hi: Fraction) -> Optional[tuple[Fraction, int]]:
    a = Fraction(0)
    length = Fraction(1)
    k = 0
    while True:
        third = length / 3
        g_l = a + third
        g_r = g_l + third
        if u_lo <= g_l and u_hi >= g_r:
            return g_l, k + 1
        if u_hi <= g_l:
            pass
        elif u_lo >= g_r:
            a = g_r
        else:
            raise DomainError("region endpoint lies inside a gap")
        length = third
        k += 1


def least_gap(S: GridCantorSet, lo, hi) -> Optional[Gap]:
    """The least-generation, leftmost gap of S contained in [lo, hi].

    lo and hi must be points of S with lo < hi; returns None only when lo == hi.
    """
    t_lo = S.to_cell_units(lo)
    t_hi = S.to_cell_units(hi)
    if t_lo >= t_hi:
        return None
    a, b = _triadic(t_lo), _triadic(t_hi)
    if a is not None and b is not None:
        E = max(a[1], b[1], 1)
        n_lo, n_hi = a[0] * 3 ** (E - a[1]), b[0] * 3 ** (E - b[1])
        while True:
            try:
                r = _least_gap_int(n_lo, n_hi, E)
                break
            except _TooDeep:
                n_lo, n_hi, E = 3 * n_lo, 3 * n_hi, E + 1
        unit = S.cell_width / 3**E
        return Gap(S.origin + r[0] * unit, S.origin + r[1] * unit, r[2])
    return _least_gap_fraction(S, t_lo, t_hi)


def _least_gap_fraction(S: GridCantorSet, t_lo: Fraction, t_hi: Fraction) -> Optional[Gap]:
    c0 = math.floor(t_lo)
    c1 = math.ceil(t_hi) - 1
    best = None  # (generation, cell, left in cell)
    if c0 == c1:
        r = _least_gap_in_cell(t_lo - c0, t_hi - c0)
        if r is not None:
            best = (r[1], c0, r[0])
    else:
        r = _least_gap_in_cell(t_lo - c0, Fraction(1))
        if r is not None:
            best = (r[1], c0, r[0])
        if c1 > c0 + 1 and (best is None or best[0] > 1):
            best = (1, c0 + 1, Fraction(1, 3))
        if best is None or best[0] > 1:
            r = _least_gap_in_cell(Fraction(0), t_hi - c1)
            if r is not None and (best is None or r[1] < best[0]):
                best = (r[1], c1, r[0])
    if best is None:
        return None
    gen, c, a = best
    length = Fraction(1, 3**gen)
    return Gap(S.from_cell_units(c + a), S.from_cell_units(c + a + length), gen)


class _TooDeep(Exception):
    pass


_POW3 = tuple(3**k for k in range(1024))


def _pow3(k: int) -> int:
    return _POW3[k] if k < 1024 else 3**k


def _cell_gap_int(U_lo: int, U_hi: int, E: int):
    """Integer twin of the in-cell search: cell [0, 3^E], gap (left, right, generation) at level E."""
    if U_lo >= U_hi:
        return None
    # no gap longer than the region fits in it, so start at the level whose intervals first exceed it
    w = U_hi - U_lo
    m = max(int(w.bit_length() / _LOG2_3) - 1, 0)
    while _pow3(m) <= w:
        m += 1
    if m >= E:
        base, k = 0, 0
    else:
        L = _pow3(m)
        base, k = (U_lo // L) * L, E - m
    while True:  # current interval [base, base + 3^(E-k)]
        if k >= E:
            raise _TooDeep
        scale = _pow3(E - k - 1)
        g_l = base + scale
        g_r = g_l + scale
        if U_lo <= g_l and U_hi >= g_r:
            return g_l, g_r, k + 1
        if U_lo >= g_r:
            base = g_r
        elif U_hi > g_l:
            raise DomainError("region endpoint lies inside a gap")
        k += 1


def _least_gap_int(lo: int, hi: int, E: int):
    """:func:`least_gap` on integer coordinates ``(x - origin) / (cell_width / 3^E)``."""
    if lo >= hi:
        return None
    P = _pow3(E)
    c0 = lo // P
    c1 = -(-hi // P) - 1
    if c0 == c1:
        base = c0 * P
        r = _cell_gap_int(lo - base, hi - base, E)
        return None if r is None else (base + r[0], base + r[1], r[2])
    best = None
    base = c0 * P
    if lo - base < P:
        r = _cell_gap_int(lo - base, P, E)
        if r is not None:
            best = (base + r[0], base + r[1], r[2])
    if c1 > c0 + 1 and (best is None or best[2] > 1):
        base = (c0 + 1) * P
        return (base + P // 3, base + 2 * P // 3, 1)
    if best is None or best[2] > 1:
        base = c1 * P
        if hi > base:
            r = _cell_gap_int(0, hi - base, E)
            if r is not None and (best is None or r[2] < best[2]):
                best = (base + r[0], base + r[1], r[2])
    return best


class IntMatching(NamedTuple):
    """Matched gaps on integer coordinates of level ``level``: x = origin + n * cell_width / 3^level."""

    level: int
    depth: int
    source_left: list
    source_right: list
    target_left: list
    target_right: list


def _int_matching(source: "CantorBlock", target: "CantorBlock", depth: int, level: int) -> IntMatching:
    P = 3**level
    sl, sr, tl, tr = [], [], [], []
    stack = [(source.start_cell * P, (source.start_cell + source.cell_count) * P,
              target.start_cell * P, (target.start_cell + target.cell_count) * P, False, None)]
    while stack:
        a_lo, a_hi, b_lo, b_hi, visited, pair = stack.pop()
        if visited:
            ga, gb = pair
            sl.append(ga[0]); sr.append(ga[1]); tl.append(gb[0]); tr.append(gb[1])
            continue
        if a_lo >= a_hi:
            continue
        ga = _least_gap_int(a_lo, a_hi, level)
        gb = _least_gap_int(b_lo, b_hi, level)
        if ga[2] > depth and gb[2] > depth:
            continue
        stack.append((ga[1], a_hi, gb[1], b_hi, False, None))
        stack.append((0, 0, 0, 0, True, (ga, gb)))
        stack.append((a_lo, ga[0], b_lo, gb[0], False, None))
    return IntMatching(level, depth, sl, sr, tl, tr)


class _Node:
    __slots__ = (
        "a_lo", "a_hi", "b_lo", "b_hi", "depth",
        "gap_a", "gap_b", "left", "right",
        "fa_l", "fa_r", "fb_l", "fb_r", "slope", "fb_lo", "fb_hi",
    )

    def __init__(self, a_lo, a_hi, b_lo, b_hi, depth):
        self.a_lo, self.a_hi, self.b_lo, self.b_hi = a_lo, a_hi, b_lo, b_hi
        self.fb_lo, self.fb_hi = float(b_lo), float(b_hi)
        self.depth = depth
        self.gap_a = None
        self.gap_b = None
        self.left = None
        self.right = None


class _INode:
    __slots__ = ("a_lo", "a_hi", "b_lo", "b_hi", "ga", "gb", "left", "right", "lin")

    def __init__(self, a_lo, a_hi, b_lo, b_hi):
        self.a_lo, self.a_hi, self.b_lo, self.b_hi = a_lo, a_hi, b_lo, b_hi
        self.ga = None
        self.left = None
        self.lin = None  # unknown; False, or the slope exponent when both sides are basic intervals


def _basic_level(lo: int, hi: int, E: int) -> Optional[int]:
    """m if [lo, hi] is a basic interval of length 3^m of the set in level-E coordinates, else None."""
    L = hi - lo
    m = int((L.bit_length() - 1) / _LOG2_3)
    while _pow3(m) < L:
        m += 1
    while m > 0 and _pow3(m) > L:
        m -= 1
    if _pow3(m) != L or m > E:
        return None
    if lo % L:
        return None
    # the retained digits of the left end avoid 1
    q = (lo % _pow3(E)) // L
    while q:
        q, d = divmod(q, _CHUNK_BASE)
        if d not in _NO_ONES:
            return None
    return m


# fixed level of the integer tree; points deeper than this use the Fraction tree
_INT_LEVEL = 400


class GapMatching(NamedTuple):
    pairs: list  # [(Gap of A, Gap of B)] in increasing order
    depth: int


class TransportPlan:
    """Increasing homeomorphism of hull(A) onto hull(B) carrying A∩S onto B∩S.

    Matched gap closures map affinely.  Any other point is bracketed by the
    images of the regions containing it, and the bracket is certified: the
    limiting homeomorphism lies inside it.  Refinement mutates the lazily built
    tree under a lock; reads of existing nodes need no locking.
    """

    def __init__(self, source: CantorBlock, target: CantorBlock):
        self.source = source
        self.target = target
        self._lock = threading.Lock()
        self._int_cache: dict = {}
        P = _pow3(_INT_LEVEL)
        self._iroot = _INode(source.start_cell * P, (source.start_cell + source.cell_count) * P,
                             target.start_cell * P, (target.start_cell + target.cell_count) * P)
        self.root = _Node(source.lo, source.hi, target.lo, target.hi, 0)

    # -- tree expansion ---------------------------------------------------
    def _split(self, node: _Node) -> None:
        if node.gap_a is not None:
            return
        with self._lock:
            if node.gap_a is not None:
                return
            ga = least_gap(self.source.cantor, node.a_lo, node.a_hi)
            gb = least_gap(self.target.cantor, node.b_lo, node.b_hi)
            node.fa_l, node.fa_r = float(ga.left), float(ga.right)
            node.fb_l, node.fb_r = float(gb.left), float(gb.right)
            node.slope = gb.length / ga.length
            node.left = _Node(node.a_lo, ga.left, node.b_lo, gb.left, node.depth + 1)
            node.right = _Node(ga.right, node.a_hi, gb.right, node.b_hi, node.depth + 1)
            node.gap_b = gb
            node.gap_a = ga  # published last: readers test gap_a

    # -- evaluation --------------------------------------------------------
    def enclose_exact(self, x, tol=Fraction(0), max_depth: int = 200):
        """Exact bracket (lo, hi) of the image of a rational x.

        Comparisons run in floats and fall back to exact arithmetic only when
        the float margin is too thin to decide.
        """
        x = Fraction(x)
        node = self.root
        if x < node.a_lo or x > node.a_hi:
            raise DomainError(f"{x} outside [{node.a_lo}, {node.a_hi}]")
        if x == node.a_lo:
            return node.b_lo, node.b_lo
        if x == node.a_hi:
            return node.b_hi, node.b_hi
        fx = float(x)
        slack = 1e-12 * (1.0 + abs(fx))
        ftol = float(tol)
        while True:
            width = node.fb_hi - node.fb_lo
            if node.depth >= max_depth or (
                width <= ftol - slack or (abs(width - ftol) <= slack and node.b_hi - node.b_lo <= tol)
            ):
                return node.b_lo, node.b_hi
            self._split(node)
            ga = node.gap_a
            if fx < node.fa_l - slack:
                node = node.left
            elif fx > node.fa_r + slack:
                node = node.right
            elif node.fa_l + slack < fx < node.fa_r - slack:
                y = node.gap_b.left + (x - ga.left) * node.slope
                return y, y
            elif ga.left <= x <= ga.right:
                y = node.gap_b.left + (x - ga.left) * node.slope
                return y, y
            else:
                node = node.left if x < ga.left else node.right

    def _isplit(self, node: _INode) -> None:
        with self._lock:
            if node.ga is not None:
                return
            ga = _least_gap_int(node.a_lo, node.a_hi, _INT_LEVEL)
            gb = _least_gap_int(node.b_lo, node.b_hi, _INT_LEVEL)
            node.left = _INode(node.a_lo, ga[0], node.b_lo, gb[0])
            node.right = _INode(ga[1], node.a_hi, gb[1], node.b_hi)
            node.gb = gb
            node.ga = ga

    def _image_int(self, n: int) -> int:
        """Exact image on integer coordinates of level ``_INT_LEVEL``; raises _TooDeep past that level."""
        node = self._iroot
        if n == node.a_lo:
            return node.b_lo
        if n == node.a_hi:
            return node.b_hi
        while True:
            if node.lin is None:
                ma = _basic_level(node.a_lo, node.a_hi, _INT_LEVEL)
                mb = _basic_level(node.b_lo, node.b_hi, _INT_LEVEL) if ma is not None else None
                node.lin = False if mb is None else mb - ma
            if node.lin is not False:
                # both sides basic: the matching below is the similarity between them
                k, d = node.lin, n - node.a_lo
                if k >= 0:
                    return node.b_lo + d * _pow3(k)
                q, r = divmod(d, _pow3(-k))
                if r:
                    raise _TooDeep
                return node.b_lo + q
            if node.ga is None:
                self._isplit(node)
            gl, gr, g = node.ga
            if n < gl:
                node = node.left
            elif n > gr:
                node = node.right
            else:
                # slopes between matched gaps are powers of 3
                k = g - node.gb[2]
                d = n - gl
                if k >= 0:
                    return node.gb[0] + d * _pow3(k)
                q, r = divmod(d, _pow3(-k))
                if r:
                    raise _TooDeep
                return node.gb[0] + q

    def image_exact(self, x, max_depth: Optional[int] = None) -> Fraction:
        x = Fraction(x)
        S = self.source.cantor
        if self.target.cantor == S and max_depth is None:
            t = S.triadic_units(x)
            if t is not None and t[1] <= _INT_LEVEL:
                n = t[0] * _pow3(_INT_LEVEL - t[1])
                if self._iroot.a_lo <= n <= self._iroot.a_hi:
                    try:
                        y = self._image_int(n)
                    except _TooDeep:
                        pass
                    else:
                        o, w, P = S.origin, S.cell_width, _pow3(_INT_LEVEL)
                        return Fraction(o.numerator * w.denominator * P + y * w.numerator * o.denominator,
                                        o.denominator * w.denominator * P)
        if max_depth is None:
            # a path crosses each cell once, then gains a generation every other split
            t = _triadic(self.source.cantor.to_cell_units(x))
            max_depth = self.source.cell_count + 2 * (t[1] if t else 0) + 200
        lo, hi = self.enclose_exact(x, Fraction(0), max_depth)
        if lo != hi:
            raise NotExactError(f"{x} is not a gap endpoint reachable within depth {max_depth}")
        return lo

    def enclose(self, x: float, tol: float, max_depth: int = 200) -> tuple[float, float]:
        """Float bracket of the image of x, narrowed until its width is at most tol."""
        node = self.root
        x = float(x)
        if x <= float(node.a_lo):
            return node.fb_lo, node.fb_lo
        if x >= float(node.a_hi):
            return node.fb_hi, node.fb_hi
        while node.fb_hi - node.fb_lo > tol and node.depth < max_depth:
            self._split(node)
            if x < node.fa_l:
                node = node.left
            elif x > node.fa_r:
                node = node.right
            else:
                y = node.fb_l + (x - node.fa_l) * float(node.slope)
                return y, y
        return node.fb_lo, node.fb_hi

    def __call__(self, x, tol: float = 1e-12) -> float:
        lo, hi = self.enclose(x, tol)
        return 0.5 * (lo + hi)

    # -- matchings -------------------------------------------------------------
    def matching(self, depth: int) -> GapMatching:
        """Matched pairs after refining until every gap of generation <= depth on both sides is matched."""
        pairs = []
        stack = [(self.root, False)]
        # in-order traversal, expanding nodes that still hide a shallow gap
        while stack:
            node, visited = stack.pop()
            if visited:
                pairs.append((node.gap_a, node.gap_b))
                continue
            if node.a_lo >= node.a_hi:
                continue
            ga = least_gap(self.source.cantor, node.a_lo, node.a_hi) if node.gap_a is None else node.gap_a
            gb = least_gap(self.target.cantor, node.b_lo, node.b_hi) if node.gap_b is None else node.gap_b
            if ga.generation > depth and gb.generation > depth:
                continue
            self._split(node)
            stack.append((node.right, False))
            stack.append((node, True))
            stack.append((node.left, False))
        return GapMatching(pairs, depth)

    def int_matching(self, depth: int) -> IntMatching:
        """:meth:`matching` on integer coordinates; cached per depth.

        The level starts a few generations below ``depth`` and grows when a
        matched gap on the other side is deeper still.
        """
        if self.source.cantor != self.target.cantor:
            raise DomainError("integer matching needs one grid Cantor set on both sides")
        cache = self._int_cache
        if depth not in cache:
            level = depth + 4
            while True:
                try:
                    cache[depth] = _int_matching(self.source, self.target, depth, level)
                    break
                except _TooDeep:
                    level += 4
        return cache[depth]

    def inverse(self) -> "TransportPlan":
        """The plan with roles swapped; its matching is the mirror of this one."""
        return TransportPlan(self.target, self.source)

    def translated(self, cells: int) -> "TransportPlan":
        return TransportPlan(self.source.translate(cells), self.target)

    def to_dict(self, depth: Optional[int] = None) -> dict:
        d = {"source": self.source.to_dict(), "target": self.target.to_dict()}
        if depth is not None:
            d["matching_depth"] = depth
            d["pairs"] = [
                [[str(a.left), str(a.right)], [str(b.left), str(b.right)]]
                for a, b in self.matching(depth).pairs
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransportPlan":
        plan = cls(CantorBlock.from_dict(d["source"]), CantorBlock.from_dict(d["target"]))
        if "pairs" in d:
            got = plan.to_dict(int(d["matching_depth"]))["pairs"]
            if got != d["pairs"]:
                raise DomainError("stored gap matching does not reproduce")
        return plan


def order_homeo(source: CantorBlock, target: CantorBlock) -> TransportPlan:
    """Order-preserving homeomorphism hull(source) -> hull(target) with S-parts matched."""
    return TransportPlan(source, target)


def sample_gap_endpoints(block: CantorBlock, max_generation: int, count: int, rng) -> list[Fraction]:
    """``count`` endpoints of distinct gaps drawn uniformly among those of generation at most max_generation.

    ``rng`` is a numpy Generator; each chosen gap contributes its left or right end at random.
    """
    per_cell = 2**max_generation - 1
    total = per_cell * block.cell_count
    picks = rng.choice(total, size=min(count, total), replace=False)
    sides = rng.integers(0, 2, size=len(picks))
    out = []
    for k, side in zip(picks.tolist(), sides.tolist()):
        cell, j = divmod(k, per_cell)
        # gap j in breadth-first order: generation d holds indices 2^(d-1) - 1 .. 2^d - 2
        d = (j + 1).bit_length()
        i = j + 1 - 2 ** (d - 1)
        left = sum(Fraction(2, 3 ** (b + 1)) for b in range(d - 1) if i >> (d - 2 - b) & 1) + Fraction(1, 3**d)
        t = left + side * Fraction(1, 3**d)
        out.append(block.cantor.from_cell_units(block.start_cell + cell + t))
    return out


def iter_gap_endpoints(block: CantorBlock, max_generation: int) -> Iterator[Fraction]:
    for d in range(1, max_generation + 1):
        for g in gaps(block, d):
            yield g.left
            yield g.right
