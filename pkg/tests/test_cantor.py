from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rihom.cantor import (
    GridCantorSet,
    TransportPlan,
    cover_cells,
    gaps,
    in_middle_thirds,
    iter_gap_endpoints,
    least_gap,
    membership,
    order_homeo,
    sample_gap_endpoints,
)
from rihom.errors import DomainError

UNIT = GridCantorSet(Fraction(1), Fraction(0))


def expansion_oracle(u: Fraction, digits: int = 60) -> bool:
    """Greedy ternary digits, preferring the expansion without 1s at ties."""
    if u < 0 or u > 1:
        return False
    seen = {}
    for i in range(digits):
        if u in seen:
            return True
        seen[u] = i
        t = 3 * u
        if t < 1:
            u = t
        elif t > 2:
            u = t - 2
        elif t == 1 or t == 2:
            # 0.1 = 0.0222..., 0.2 keeps digit 2
            u = Fraction(1) if t == 1 else Fraction(0)
        else:
            return False
    return True


cantor_points = st.lists(st.sampled_from([0, 2]), min_size=1, max_size=25).map(
    lambda ds: sum(Fraction(d, 3 ** (i + 1)) for i, d in enumerate(ds))
)


def test_membership_examples():
    S = GridCantorSet(Fraction(1, 4), Fraction(-3))
    assert membership(S, Fraction(-3)) and membership(S, Fraction(-3) + Fraction(1, 4))
    assert not membership(S, S.from_cell_units(Fraction(5, 2)))
    assert membership(S, S.from_cell_units(Fraction(9, 4)))
    assert expansion_oracle(Fraction(1, 4))


@given(st.fractions(min_value=0, max_value=1, max_denominator=3**7 * 5))
def test_membership_matches_expansion(u):
    assert in_middle_thirds(u) == expansion_oracle(u)


@given(cantor_points, st.integers(min_value=-5, max_value=5))
def test_points_with_digits_0_2_are_members(u, cell):
    S = GridCantorSet(Fraction(3, 7), Fraction(1, 5))
    assert membership(S, S.from_cell_units(cell + u))
    # the midpoint of any gap lies outside
    g = least_gap(S, S.from_cell_units(cell), S.from_cell_units(cell + 1))
    assert not membership(S, (g.left + g.right) / 2)


def test_gap_lists():
    assert [(g.left, g.right) for g in gaps(UNIT.block(0, 1), 1)] == [(Fraction(1, 3), Fraction(2, 3))]
    assert [(g.left, g.right) for g in gaps(UNIT.block(0, 1), 2)] == [
        (Fraction(1, 9), Fraction(2, 9)),
        (Fraction(7, 9), Fraction(8, 9)),
    ]
    assert [(g.left, g.right) for g in gaps(UNIT.block(0, 2), 1)] == [
        (Fraction(1, 3), Fraction(2, 3)),
        (Fraction(4, 3), Fraction(5, 3)),
    ]
    with pytest.raises(DomainError):
        gaps(UNIT.block(0, 1), 0)


def test_cover_length_shrinks_by_two_thirds():
    block = UNIT.block(0, 3)
    for d in range(0, 6):
        cells = cover_cells(block, d)
        assert len(cells) == 3 * 2**d
        assert sum(b - a for a, b in cells) == 3 * Fraction(2, 3) ** d


def test_identity_transport():
    plan = order_homeo(UNIT.block(0, 1), UNIT.block(0, 1))
    for x in iter_gap_endpoints(UNIT.block(0, 1), 4):
        assert plan.image_exact(x) == x


def test_scaling_transport_is_linear():
    S2 = GridCantorSet(Fraction(2), Fraction(0))
    plan = order_homeo(UNIT.block(0, 1), S2.block(0, 1))
    for x in iter_gap_endpoints(UNIT.block(0, 1), 4):
        assert plan.image_exact(x) == 2 * x
    for x in (0.1, 0.25, 0.6):
        lo, hi = plan.enclose(x, 1e-9)
        assert lo <= 2 * x + 1e-9 and 2 * x - 1e-9 <= hi


def is_gap_endpoint(S, y):
    t = S.to_cell_units(y)
    d = t.denominator
    while d % 3 == 0:
        d //= 3
    return d == 1 and membership(S, y)


def test_two_cells_onto_one():
    plan = order_homeo(UNIT.block(0, 2), UNIT.block(0, 1))
    xs = sorted(set(iter_gap_endpoints(UNIT.block(0, 2), 4)))
    ys = [plan.image_exact(x) for x in xs]
    assert all(is_gap_endpoint(UNIT, y) for y in ys)
    assert all(a < b for a, b in zip(ys, ys[1:]))
    assert plan.image_exact(Fraction(0)) == 0 and plan.image_exact(Fraction(2)) == 1


def test_matching_orders_and_pairs_gaps():
    plan = order_homeo(UNIT.block(0, 2), UNIT.block(0, 1))
    pairs = plan.matching(6).pairs
    for (a, b), (c, d) in zip(pairs, pairs[1:]):
        assert a.right <= c.left and b.right <= d.left
    # the integer matching pairs the same gaps
    im = plan.int_matching(4)
    frac = plan.matching(4).pairs
    scale = Fraction(1, 3**im.level)
    got = [(l * scale, r * scale, tl * scale, tr * scale)
           for l, r, tl, tr in zip(im.source_left, im.source_right, im.target_left, im.target_right)]
    assert got == [(a.left, a.right, b.left, b.right) for a, b in frac]


@given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6))
def test_transport_properties(seed, n_src, n_tgt):
    S = GridCantorSet(Fraction(1, 4), Fraction(-1))
    rng = np.random.default_rng(seed)
    src, tgt = S.block(int(rng.integers(-3, 3)), n_src), S.block(int(rng.integers(-3, 3)), n_tgt)
    plan = order_homeo(src, tgt)
    xs = sorted(set(sample_gap_endpoints(src, 3, 20, rng)))
    ys = [plan.image_exact(x) for x in xs]
    # endpoints go to endpoints, order is kept, and the inverse plan undoes the map
    assert all(is_gap_endpoint(S, y) for y in ys)
    assert all(a < b for a, b in zip(ys, ys[1:]))
    inv = plan.inverse()
    assert [inv.image_exact(y) for y in ys] == xs
    for x, y in zip(xs, ys):
        lo, hi = plan.enclose_exact(x, Fraction(0), 500)
        assert lo == hi == y


@given(st.integers(min_value=0, max_value=2**31))
def test_least_gap_is_least_and_leftmost(seed):
    rng = np.random.default_rng(seed)
    S = GridCantorSet(Fraction(1, 2), Fraction(0))
    block = S.block(0, 3)
    pts = sorted(set(sample_gap_endpoints(block, 4, 2, rng)) | {block.lo})
    lo, hi = pts[0], pts[-1]
    g = least_gap(S, lo, hi)
    inside = [h for d in range(1, 6) for h in gaps(block, d) if lo <= h.left and h.right <= hi]
    best = min(inside, key=lambda h: (h.generation, h.left))
    assert (g.left, g.right, g.generation) == (best.left, best.right, best.generation)


def test_sample_gap_endpoints_draws_distinct_gaps():
    block = UNIT.block(0, 3)
    pts = sample_gap_endpoints(block, 3, 21, np.random.default_rng(0))
    all_gaps = [g for d in (1, 2, 3) for g in gaps(block, d)]
    owners = {next(i for i, g in enumerate(all_gaps) if x in (g.left, g.right)) for x in pts}
    assert len(owners) == 21


@given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=5))
def test_integer_images_match_the_exact_tree(seed, n_src, n_tgt):
    rng = np.random.default_rng(seed)
    S = GridCantorSet(Fraction(1, 8), Fraction(-3))
    A = S.block(int(rng.integers(0, 30)), n_src)
    B = S.block(int(rng.integers(0, 30)), n_tgt)
    plan = TransportPlan(A, B)
    for x in sample_gap_endpoints(A, 6, 10, rng):
        # an explicit depth forces the rational tree
        assert plan.image_exact(x) == plan.image_exact(x, max_depth=2000)
