"""Command-line front end.

Exit codes: 0 success, 1 domain failure (invalid system, failed construction,
unmet diagnostic), 2 usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import rng
from .conjugacy import h_inverse_array
from .construct_cantor import perturb_cantor
from .construct_minimal import density_diagnostic, perturb_minimal
from .errors import ConstructionError, DomainError, InfeasibleError, InvalidMapError
from .io import cantor_of, load_system, save_bundle
from .solver import cover_mass, stationary_solve, support_grid_mass
from .systems import system_distance, validate

EXIT_OK, EXIT_DOMAIN, EXIT_PARSE = 0, 1, 2


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _emit(data: dict, out) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def cmd_validate(args) -> int:
    report = validate(load_system(args.system))
    for line in report.lines():
        print(line)
    if not report.ok:
        print("invalid: failed " + ", ".join(f"({k})" for k in report.failed()))
        return EXIT_DOMAIN
    print("valid")
    return EXIT_OK


def cmd_perturb(args) -> int:
    F = load_system(args.system)
    report = validate(F)
    if not report.ok:
        print("input system invalid: failed " + ", ".join(f"({k})" for k in report.failed()), file=sys.stderr)
        return EXIT_DOMAIN
    if args.mode == "cantor":
        result = perturb_cantor(F, args.eps)
    else:
        result = perturb_minimal(F, args.eps)
    out = args.out or f"{Path(args.system).stem}_{args.mode}"
    save_bundle(out, result.system, result.descriptor(), result.report())
    print(json.dumps(result.report(), indent=2))
    print(f"bundle written to {out}")
    return EXIT_OK


def _solve(system, tol):
    return stationary_solve(system, tol, cantor=cantor_of(system))


def cmd_stationary(args) -> int:
    system = load_system(args.system)
    env = _solve(system, args.tol)
    if args.out:
        with open(args.out, "w") as fh:
            env.to_csv(fh, max_rows=args.max_rows)
    else:
        env.to_csv(sys.stdout, max_rows=args.max_rows)
    print(f"error bound {env.error:.6g} (tol {args.tol}), converged={env.converged}", file=sys.stderr)
    return EXIT_OK if env.converged else EXIT_DOMAIN


def cmd_diagnose(args) -> int:
    system = load_system(args.system)
    if args.tol is None:
        # certifying every cell positive needs an error below the lightest cell's mass
        args.tol = 0.005 if args.mode == "singular" else 2.5e-4
    if args.mode == "singular":
        S = cantor_of(system)
        if S is None:
            print("singular diagnostic needs a Cantor-constructed system", file=sys.stderr)
            return EXIT_DOMAIN
        env = _solve(system, args.tol)
        cm = cover_mass(env, S, args.depth)
        data = {
            "mode": "singular",
            "depth": cm.depth,
            "cells": cm.cells,
            "cover_mass_lower": cm.mass_lower,
            "length_factor": str(cm.length_factor),
            "length_factor_float": float(cm.length_factor),
            "solver_error": env.error,
        }
        _emit(data, args.out)
        return EXIT_OK if cm.mass_lower >= args.threshold else EXIT_DOMAIN
    window = tuple(args.window)
    env = _solve(system, args.tol)
    cells = support_grid_mass(env, window, args.cells)
    data = {
        "mode": "support",
        "window": list(window),
        "solver_error": env.error,
        "cells": [{"a": a, "b": b, "mass_lower": lo, "mass_upper": hi} for a, b, lo, hi in cells],
        "certified_positive": all(lo > 0 for _, _, lo, _ in cells),
    }
    if (system.provenance or {}).get("construction") == "minimal":
        dens = density_diagnostic(system, args.start, window, args.cells)
        data["density"] = dens.to_dict()
    _emit(data, args.out)
    ok = data["certified_positive"] and data.get("density", {}).get("status", "complete") == "complete"
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_distance(args) -> int:
    d_m, d_0 = system_distance(load_system(args.a), load_system(args.b))
    print(f"d_m = {d_m!r}")
    print(f"d_0 = {d_0!r}")
    return EXIT_OK


def cmd_orbit(args) -> int:
    """One random orbit: step, map index, real and unit coordinates."""
    system = load_system(args.system)
    u = rng.stream_uniforms(args.seed, 0, args.samples)
    p = float(system.p)
    xs = np.empty(args.samples)
    x = float(args.start)
    for t in range(args.samples):
        x = float(system.F0.eval(x)) if u[t] < p else float(system.F1.eval(x))
        xs[t] = x
    idx = np.where(u < p, 0, 1)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "map", "x_real", "x_unit"])
        for t, (i, x, xu) in enumerate(zip(idx, xs, h_inverse_array(xs)), start=1):
            w.writerow([t, int(i), repr(float(x)), repr(float(xu))])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rihom", description="Random interval homeomorphisms on the real line.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the defining conditions of a system file")
    p.add_argument("system")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("perturb", help="build an eps-close Cantor-supported or minimal system")
    p.add_argument("system")
    p.add_argument("--mode", choices=("cantor", "minimal"), required=True)
    p.add_argument("--eps", type=_positive, required=True)
    p.add_argument("--out", help="bundle directory")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("stationary", help="certified CDF envelope of the stationary measure as CSV")
    p.add_argument("system")
    p.add_argument("--tol", type=_positive, default=0.005)
    p.add_argument("--max-rows", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("diagnose", help="singular-support or full-support evidence")
    p.add_argument("system")
    p.add_argument("--mode", choices=("singular", "support"), required=True)
    p.add_argument("--tol", type=_positive, default=None, help="solver tolerance (default 0.005 singular, 2.5e-4 support)")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--threshold", type=float, default=0.99, help="cover mass required in singular mode")
    p.add_argument("--window", type=float, nargs=2, default=(-5.0, 5.0), metavar=("A", "B"))
    p.add_argument("--cells", type=int, default=40)
    p.add_argument("--start", type=float, default=0.0, help="orbit start for the density search")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("distance", help="d_m and d_0 between two systems")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("orbit", help="one seeded random orbit as CSV")
    p.add_argument("system")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_orbit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InvalidMapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConstructionError as exc:
        step = f" [step {exc.step}]" if exc.step else ""
        print(f"construction failed: {exc}{step}", file=sys.stderr)
        return EXIT_DOMAIN
    except (DomainError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
