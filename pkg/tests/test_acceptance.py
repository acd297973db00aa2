"""Desk-scale acceptance checks, one test per criterion.

Every test records a ``criterion N: PASS|FAIL`` line with its measured value
and runtime; the lines are printed again in the pytest terminal summary.
Run directly with ``python3 tests/test_acceptance.py``.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from helpers import ACCEPTANCE, boxes_by_scan, random_measure, shrink_into_class, tail_example_system
from rihom.cantor import membership, sample_gap_endpoints
from rihom.conjugacy import h_forward_array
from rihom.construct_cantor import ConstructionParams, build_boxes, chain_map, perturb_cantor
from rihom.construct_minimal import density_diagnostic, perturb_minimal
from rihom.maps import endpoint_derivatives, sup_distance_bounds, transport_map, translation, unit_eval_array, unit_points_of
from rihom.markov import AtomicMeasure, apply_markov, kolmogorov_distance, monte_carlo_samples, side_certificate, xi
from rihom.samples import random_affine_system, random_unit_points, random_unit_system, symmetric_drift_system, translation_pair
from rihom.solver import cover_mass, stationary_solve, support_grid_mass
from rihom.systems import derivative_window, system_distance, validate


@contextmanager
def criterion(number: int, title: str, budget: float):
    """Time the block, then record and print one pass/fail line; runtime over budget fails too."""
    info = {}
    t0 = time.perf_counter()
    failure = None
    try:
        yield info
    except Exception as exc:
        failure = exc
    elapsed = time.perf_counter() - t0
    if failure is None and elapsed > budget:
        failure = AssertionError(f"runtime {elapsed:.1f}s over budget {budget:g}s")
    detail = ", ".join(f"{k}={v}" for k, v in info.items())
    status = "PASS" if failure is None else "FAIL"
    line = f"criterion {number}: {status} {title} [{detail}] ({elapsed:.1f}s / {budget:g}s)"
    if failure is not None:
        line += f" -- {type(failure).__name__}: {failure}"
    ACCEPTANCE[number] = line
    print(line)
    if failure is not None:
        raise failure


def test_isometry_of_the_conjugacy():
    with criterion(1, "unit-coordinate d_C equals real-line sup distance", 10) as info:
        rng = np.random.default_rng(2024)
        us = np.linspace(0, 1, 100_002)[1:-1]
        worst = 0.0
        for _ in range(50):
            A, B = random_unit_system(rng), random_unit_system(rng)
            for f, g in zip(A.maps, B.maps):
                pf, pg = unit_points_of(f), unit_points_of(g)
                knots = np.array([float(u) for u, _ in pf + pg if 0 < u < 1])
                u = np.union1d(us, knots)
                d_c = float(np.max(np.abs(h_forward_array(unit_eval_array(pf, u)) - h_forward_array(unit_eval_array(pg, u)))))
                lo, hi = sup_distance_bounds(f, g, tol=1e-9)
                worst = max(worst, abs(d_c - hi), hi - lo)
        info["max_discrepancy"] = f"{worst:.2e}"
        assert worst <= 1e-6


def _nudged(points, rng, eps):
    """Unit breakpoints with interior values scaled by random factors in (e^-eps, e^eps)."""
    out = [points[0]]
    for (u, v), (_, v_next) in zip(points[1:-1], points[2:]):
        factor = Fraction(math.exp(rng.uniform(-eps, eps))).limit_denominator(10**6)
        w = min(v * factor, Fraction(1) - (1 - v) / 2)
        w = max(w, out[-1][1] + (v - out[-1][1]) / 2)
        out.append((u, w))
    out.append(points[-1])
    return out if all(b[1] > a[1] for a, b in zip(out, out[1:])) else None


def _log_ratio(a: Fraction, b: Fraction):
    with mpmath.workdps(40):
        return abs(mpmath.log(mpmath.mpf(a.numerator) / a.denominator) - mpmath.log(mpmath.mpf(b.numerator) / b.denominator))


def test_endpoint_derivative_continuity():
    with criterion(2, "endpoint derivatives of close maps stay in the window", 1) as info:
        rng = np.random.default_rng(7)
        checked = 0
        for eps in (0.1, 0.01):
            pairs = 0
            while pairs < 50:
                pf = random_unit_points(rng, below=pairs % 2 == 0)
                f = transport_map(pf)
                pg = _nudged(pf, rng, eps / 2)
                if pg is None:
                    continue
                g = transport_map(pg)
                if not sup_distance_bounds(f, g, tol=eps / 100)[1] < eps:
                    continue
                pairs += 1
                # exact unit slopes at both endpoints
                f0 = pf[1][1] / pf[1][0]
                g0 = pg[1][1] / pg[1][0]
                f1 = (1 - pf[-2][1]) / (1 - pf[-2][0])
                g1 = (1 - pg[-2][1]) / (1 - pg[-2][0])
                assert _log_ratio(g0, f0) < eps and _log_ratio(g1, f1) < eps
                lo, hi = derivative_window(endpoint_derivatives(f)[0], eps)
                assert lo < endpoint_derivatives(g)[0] < hi
                checked += 1
        info["pairs"] = checked
        assert checked == 100


def _words_stay_in_set(G, S, points, length):
    frontier = set(points)
    seen = 0
    for _ in range(length):
        frontier = {Fraction(m.exact(x)) for x in frontier for m in G.maps}
        for y in frontier:
            assert membership(S, y), f"image {y} left the Cantor set"
        seen += len(frontier)
    return seen


def test_cantor_construction_at_scale():
    with criterion(3, "Cantor perturbation: close, valid, invariant under words of length <= 6", 60) as info:
        rng = np.random.default_rng(2024)
        systems = [random_affine_system(rng) for _ in range(20)]
        images = 0
        worst = 0.0
        for F in systems:
            for eps in (0.5, 0.1):
                c = perturb_cantor(F, eps)
                assert c.d_m_bound < eps
                worst = max(worst, c.d_m_bound / eps)
                assert validate(c.system).ok
                S, R = c.cantor, c.params.R
                block = S.block(S.cell_of(-R), int(2 * R / S.cell_width))
                pts = sample_gap_endpoints(block, 3, 100, np.random.default_rng(0))
                assert len(pts) == 100 and all(membership(S, x) for x in pts)
                images += _words_stay_in_set(c.system, S, pts, 6)
        info["constructions"] = 40
        info["images_checked"] = images
        info["max_d_m/eps"] = f"{worst:.3f}"


def test_hand_traced_box_chain():
    with criterion(4, "box chain of x - 3/8 at M=3, M'=4, R=1/2", 5) as info:
        R = Fraction(1, 2)
        params = ConstructionParams(R, 3, 4, 0.3, 0.3)
        chain = build_boxes(translation(Fraction(-3, 8)), params, "below")
        e = Fraction(1, 8)
        listed = [
            ((3 * e, 4 * e), (0, e)),
            ((2 * e, 3 * e), (-e, 0)),
            ((e, 2 * e), (-2 * e, -e)),
            ((0, e), (-3 * e, -2 * e)),
            ((-e, 0), (-4 * e, -3 * e)),
        ]
        got = [b.as_tuple() for b in chain.boxes]
        assert got == listed
        assert got == boxes_by_scan(lambda x: x - Fraction(3, 8), R, 3, 4)
        assert (chain.entry, chain.exit) == ((-e, -R), (R, e))
        G0 = chain_map(chain, params.cantor())
        assert G0.left_offset == G0.right_offset == Fraction(-3, 8)
        info["boxes"] = len(got)
        info["tails"] = f"{G0.left_offset},{G0.right_offset}"


def test_singular_support():
    with criterion(5, "stationary mass on the depth-6 cover of the Cantor set", 300) as info:
        c = perturb_cantor(symmetric_drift_system(), 0.1)
        env = stationary_solve(c.system, 0.005, cantor=c.cantor)
        assert env.converged and env.error <= 0.005
        cm = cover_mass(env, c.cantor, 6)
        info["cover_mass"] = f"{cm.mass_lower:.8f}"
        info["length_factor"] = str(cm.length_factor)
        assert cm.length_factor == Fraction(2, 3) ** 6
        assert cm.mass_lower >= 0.99


def test_full_support():
    with criterion(6, "every cell of [-5, 5] carries certified mass; orbit search is dense", 300) as info:
        m = perturb_minimal(symmetric_drift_system(), 0.1)
        env = stationary_solve(m.system, 2.5e-4)
        cells = support_grid_mass(env, (-5, 5), 40)
        lows = [lo for _, _, lo, _ in cells]
        info["min_cell_mass"] = f"{min(lows):.3e}"
        assert len(cells) == 40 and all(lo > 0 for lo in lows)
        dens = density_diagnostic(m.system, Fraction(0), (-5, 5), 40, horizon=10**5)
        info["density"] = dens.status
        assert dens.status == "complete"


def test_solver_against_monte_carlo():
    with criterion(7, "solver envelope vs 10^6-sample Monte Carlo on the symmetric system", 120) as info:
        S = symmetric_drift_system()
        env = stationary_solve(S, 0.005)
        assert env.converged
        samples = monte_carlo_samples(S, 10**6, 200, seed=2024)
        d_k = kolmogorov_distance(env, AtomicMeasure.from_samples(samples))
        mid = float(env.midpoint()(0.0))
        lo, hi = env.bounds(0.0)
        info["d_K"] = f"{d_k:.4f}"
        info["cdf(0)"] = f"{mid:.4f} in [{float(lo):.4f}, {float(hi):.4f}]"
        assert d_k <= 0.01
        assert abs(mid - 0.5) <= 0.005
        assert lo <= 0.5 <= hi


def test_tail_certificate():
    with criterion(8, "xi(0.2, 0) < 1 and the tail class is invariant", 10) as info:
        val = xi(0.2, 0.0, 0.5, 0.45, 3.5)
        info["xi"] = f"{val:.5f}"
        assert abs(val - 0.9757) <= 1e-4 and val < 1
        S = tail_example_system()
        cert = side_certificate(0.5, (0.5, 4.0), "left", -2.0 - math.log(4), lambdas=(0.45, 3.5), alpha=0.2)
        rng = np.random.default_rng(8)
        for _ in range(20):
            mu = shrink_into_class(cert, rng.uniform(-25, 3, 30), rng.uniform(0.1, 1, 30))
            xs = h_forward_array(rng.uniform(1e-9, cert.x0, 100))
            assert cert.holds_for(mu, xs)
            assert cert.holds_for(apply_markov(S, mu), xs)
        info["measures"] = 20


def test_markov_basics():
    with criterion(9, "mass conservation, order preservation, d_K nonexpansive", 10) as info:
        # a lattice-preserving pair keeps the atom count linear in the step count
        mu = AtomicMeasure.dirac(0.0)
        T = translation_pair(-1, 2)
        drift = 0.0
        for _ in range(1000):
            mu = apply_markov(T, mu)
            drift = max(drift, abs(mu.mass - 1))
        assert drift <= 1e-12
        # an unreachable tolerance on a fixed grid runs exactly 1000 steps of the solver's operator
        env = stationary_solve(
            symmetric_drift_system(), 1e-9, grid=Fraction(1, 32), tail_mass=1e-4,
            max_iterations=1000, max_refinements=0, check_every=1000,
        )
        assert env.iterations == 1000
        chain_drift = max(abs(env.upper_chain.mass - 1), abs(env.lower_chain.mass - 1))
        assert chain_drift <= 1e-12
        info["mass_drift"] = f"{max(drift, chain_drift):.1e}"
        rng = np.random.default_rng(9)
        xs = np.linspace(-20, 20, 801)
        for _ in range(100):
            S = random_affine_system(rng)
            mu = random_measure(rng)
            nu = AtomicMeasure(mu.positions + rng.uniform(0, 2, len(mu)), mu.weights)
            Pm, Pn = apply_markov(S, mu), apply_markov(S, nu)
            assert np.all(Pm.cdf()(xs) >= Pn.cdf()(xs) - 1e-12)
            a, b = random_measure(rng), random_measure(rng)
            assert kolmogorov_distance(apply_markov(S, a), apply_markov(S, b)) <= kolmogorov_distance(a, b) + 1e-12
        info["pairs"] = 100


def test_continuity_trend():
    tol = 0.005
    with criterion(10, "d_K of stationary laws shrinks with d_m = 2^-n", 600) as info:
        F = symmetric_drift_system()
        base = stationary_solve(F, tol)
        dists = []
        for n in range(1, 7):
            c = Fraction(1, 2**n)
            Fn = F.replace(F0=F.F0.shifted(-c), F1=F.F1.shifted(c))
            d_m, _ = system_distance(F, Fn)
            assert d_m == pytest.approx(float(c), abs=1e-12)
            env = stationary_solve(Fn, tol)
            assert env.converged
            dists.append(kolmogorov_distance(env, base))
        info["d_K"] = "/".join(f"{d:.4f}" for d in dists)
        assert all(b <= a + 2 * tol for a, b in zip(dists, dists[1:]))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
