"""Random systems (F0, F1, p) on the real line: validity, Lyapunov exponents, distances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import conjugacy
from .errors import InvalidMapError
from .maps import (
    MonotoneMap,
    PiecewiseMap,
    endpoint_derivatives,
    map_from_dict,
    map_to_dict,
    sup_distance,
    transport_map,
)
from .numbers import format_number, is_exact, parse_number


@dataclass
class RandomSystem:
    """F0 below the diagonal, F1 above it, F0 chosen with probability p."""

    F0: MonotoneMap
    F1: MonotoneMap
    p: object = Fraction(1, 2)
    provenance: dict = field(default_factory=dict)

    @property
    def maps(self) -> tuple[MonotoneMap, MonotoneMap]:
        return self.F0, self.F1

    @property
    def pf(self) -> float:
        return float(self.p)

    def lyapunov(self) -> "LyapunovReport":
        return lyapunov(self)

    def replace(self, F0=None, F1=None, p=None) -> "RandomSystem":
        return RandomSystem(
            F0 if F0 is not None else self.F0,
            F1 if F1 is not None else self.F1,
            self.p if p is None else p,
            dict(self.provenance),
        )


@dataclass(frozen=True)
class LyapunovReport:
    lambda_minus: float
    lambda_plus: float
    offsets_F0: tuple[float, float]
    offsets_F1: tuple[float, float]


def lyapunov(system: RandomSystem) -> LyapunovReport:
    p = float(system.p)
    a0m, a0p = system.F0.tail_offsets()
    a1m, a1p = system.F1.tail_offsets()
    return LyapunovReport(
        lambda_minus=p * a0m + (1 - p) * a1m,
        lambda_plus=-p * a0p - (1 - p) * a1p,
        offsets_F0=(a0m, a0p),
        offsets_F1=(a1m, a1p),
    )


def _strict_sign(value) -> int:
    if is_exact(value):
        return (value > 0) - (value < 0)
    v = float(value)
    return (v > 0) - (v < 0)


def diagonal_side(m: MonotoneMap) -> Optional[int]:
    """+1 if m(x) > x everywhere, -1 if m(x) < x everywhere, 0 if it touches or crosses, None if undecided.

    Affine pieces are linear in x, so the sign of m(x) - x at their knots decides.
    Log-transported pieces are decided by their unit endpoints, transport
    pieces by the geometry of their boxes.
    """
    if not isinstance(m, PiecewiseMap):
        return None
    signs = {_strict_sign(m.left_offset), _strict_sign(m.right_offset)}
    for p in m.pieces:
        if p.kind == "affine":
            signs.add(_strict_sign(p.y0 - p.x0))
            signs.add(_strict_sign(p.y1 - p.x1))
        elif p.kind == "unit":
            signs.add(_strict_sign(p.v0 - p.u0))
            signs.add(_strict_sign(p.v1 - p.u1))
        else:
            if p.y1 < p.x0:
                signs.add(-1)
            elif p.y0 > p.x1:
                signs.add(1)
            else:
                signs.add(0)
    if signs == {-1}:
        return -1
    if signs == {1}:
        return 1
    return 0


@dataclass
class ValidityReport:
    conditions: dict  # label -> (passed, detail)
    lyapunov: Optional[LyapunovReport]
    derivatives: dict

    @property
    def ok(self) -> bool:
        return all(passed for passed, _ in self.conditions.values())

    def failed(self) -> list[str]:
        return [k for k, (passed, _) in self.conditions.items() if not passed]

    def to_dict(self) -> dict:
        d = {
            "valid": self.ok,
            "conditions": {k: {"pass": bool(v[0]), "detail": v[1]} for k, v in self.conditions.items()},
            "derivatives": self.derivatives,
        }
        if self.lyapunov is not None:
            d["lambda_minus"] = self.lyapunov.lambda_minus
            d["lambda_plus"] = self.lyapunov.lambda_plus
        return d

    def lines(self) -> list[str]:
        out = []
        for k, (passed, detail) in self.conditions.items():
            out.append(f"({k}) {'pass' if passed else 'FAIL'}: {detail}")
        if self.lyapunov is not None:
            out.append(f"Lambda_-inf = {self.lyapunov.lambda_minus:.12g}")
            out.append(f"Lambda_+inf = {self.lyapunov.lambda_plus:.12g}")
        for name, (d0, d1) in self.derivatives.items():
            out.append(f"{name}: f'(0) = {d0:.12g}, f'(1) = {d1:.12g}")
        return out


def validate(system: RandomSystem) -> ValidityReport:
    """Check the five defining conditions; never raises."""
    cond = {}
    homeo = all(isinstance(m, MonotoneMap) for m in system.maps)
    cond["i"] = (homeo, "F0, F1 increasing homeomorphisms with translation tails" if homeo else "not a monotone map")
    s0 = diagonal_side(system.F0) if homeo else None
    s1 = diagonal_side(system.F1) if homeo else None
    cond["ii"] = (s0 == -1, "F0(x) < x for all x" if s0 == -1 else "F0 touches or crosses the diagonal" if s0 == 0 else "undecided")
    cond["iii"] = (s1 == 1, "F1(x) > x for all x" if s1 == 1 else "F1 touches or crosses the diagonal" if s1 == 0 else "undecided")
    try:
        pv = system.p
        p_ok = 0 < pv < 1
    except TypeError:
        p_ok = False
    cond["iv"] = (bool(p_ok), f"p = {format_number(system.p) if is_exact(system.p) else system.p} in (0, 1)" if p_ok else f"p = {system.p} not in (0, 1)")
    lr = lyapunov(system) if homeo else None
    if lr is not None:
        lyap_ok = lr.lambda_minus > 0 and lr.lambda_plus > 0
        cond["v"] = (lyap_ok, f"Lambda_-inf = {lr.lambda_minus:.6g}, Lambda_+inf = {lr.lambda_plus:.6g}")
        derivs = {"F0": endpoint_derivatives(system.F0), "F1": endpoint_derivatives(system.F1)}
    else:
        cond["v"] = (False, "no Lyapunov exponents")
        derivs = {}
    return ValidityReport(cond, lr, derivs)


# ---------------------------------------------------------------------------
# distances


def _unit_sample_points(system: RandomSystem, n: int) -> np.ndarray:
    us = np.linspace(0.0, 1.0, n + 2)[1:-1]
    knots = []
    for m in system.maps:
        knots.extend(m.float_knots())
    extra = conjugacy.h_inverse_array(np.array(knots)) if knots else np.array([])
    return np.unique(np.concatenate([us, extra]))


def unit_sup_distance(F: MonotoneMap, G: MonotoneMap, us: np.ndarray) -> float:
    """Sampled sup of |f(u) - g(u)| in unit coordinates."""
    xs = conjugacy.h_forward_array(us)
    fu = conjugacy.h_inverse_array(F.eval_array(xs))
    gu = conjugacy.h_inverse_array(G.eval_array(xs))
    return float(np.max(np.abs(fu - gu))) if len(us) else 0.0


def system_distance(A: RandomSystem, B: RandomSystem, samples: int = 4000, tol: float = 1e-9) -> tuple[float, float]:
    """``(d_m, d_0)``: the maximal metric on the line and the sampled unit-coordinate sum metric."""
    dp = abs(float(A.p) - float(B.p))
    d_m = max(sup_distance(A.F0, B.F0, tol), sup_distance(A.F1, B.F1, tol), dp)
    us = np.unique(np.concatenate([_unit_sample_points(A, samples), _unit_sample_points(B, samples)]))
    d_0 = dp + unit_sup_distance(A.F0, B.F0, us) + unit_sup_distance(A.F1, B.F1, us)
    return d_m, d_0


# ---------------------------------------------------------------------------
# serialization


def system_to_dict(system: RandomSystem) -> dict:
    unit = all(getattr(m, "unit_points", None) is not None for m in system.maps)
    d = {
        "coordinates": "unit" if unit else "real",
        "p": format_number(system.p) if is_exact(system.p) else repr(float(system.p)),
        "maps": {"F0": map_to_dict(system.F0), "F1": map_to_dict(system.F1)},
    }
    if unit:
        d["maps"] = {k: v["unit_breakpoints"] for k, v in d["maps"].items()}
    if system.provenance:
        d["provenance"] = system.provenance
    return d


def system_from_dict(d: dict) -> RandomSystem:
    try:
        coords = d.get("coordinates", "real")
        maps = d["maps"]
        if coords == "unit":
            F0 = transport_map(_unit_points(maps["F0"]))
            F1 = transport_map(_unit_points(maps["F1"]))
        elif coords == "real":
            F0 = map_from_dict(maps["F0"])
            F1 = map_from_dict(maps["F1"])
        else:
            raise InvalidMapError(f"unknown coordinate system {coords!r}")
        p = parse_number(d["p"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InvalidMapError):
            raise
        raise InvalidMapError(f"malformed system description: {exc!r}") from exc
    return RandomSystem(F0, F1, p, dict(d.get("provenance", {})))


def _unit_points(entry):
    if isinstance(entry, dict):
        return entry.get("unit_breakpoints", entry.get("breakpoints"))
    return entry


def derivative_window(f0: float, eps: float) -> tuple[float, float]:
    """The open interval (e^-eps f0, e^eps f0) containing g'(0) when sup |F - G| < eps."""
    return math.exp(-eps) * f0, math.exp(eps) * f0
