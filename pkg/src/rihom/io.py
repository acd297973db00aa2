"""System files and perturbation bundles on disk.

A bundle is a directory holding ``system.json`` (the perturbed system),
``descriptor.json`` (the Cantor set and box chains, or the offsets) and
``report.json`` (closeness and validity).  Exact numbers are strings.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .cantor import GridCantorSet
from .errors import InvalidMapError
from .numbers import parse_number
from .systems import RandomSystem, system_from_dict, system_to_dict

SYSTEM_FILE = "system.json"
DESCRIPTOR_FILE = "descriptor.json"
REPORT_FILE = "report.json"


class BundleError(InvalidMapError):
    """A file or bundle could not be read or parsed."""


def _read_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise BundleError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: not JSON ({exc.msg} at line {exc.lineno})") from exc


def _write_json(path: Path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_system(path) -> RandomSystem:
    """A system from a JSON file, or the ``system.json`` inside a bundle directory."""
    path = Path(path)
    if path.is_dir():
        path = path / SYSTEM_FILE
    data = _read_json(path)
    if not isinstance(data, dict):
        raise BundleError(f"{path}: expected a JSON object")
    return system_from_dict(data)


def save_system(system: RandomSystem, path) -> Path:
    path = Path(path)
    _write_json(path, system_to_dict(system))
    return path


def save_bundle(directory, system: RandomSystem, descriptor: dict, report: dict) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_system(system, d / SYSTEM_FILE)
    _write_json(d / DESCRIPTOR_FILE, descriptor)
    _write_json(d / REPORT_FILE, report)
    return d


def load_bundle(directory) -> tuple[RandomSystem, dict, dict]:
    d = Path(directory)
    if not d.is_dir():
        raise BundleError(f"{d} is not a bundle directory")
    return load_system(d / SYSTEM_FILE), _read_json(d / DESCRIPTOR_FILE), _read_json(d / REPORT_FILE)


def cantor_of(system: RandomSystem) -> Optional[GridCantorSet]:
    """The invariant grid Cantor set recorded by a Cantor construction, if any."""
    prov = system.provenance or {}
    if prov.get("construction") != "cantor":
        return None
    try:
        R = Fraction(parse_number(prov["R"]))
        return GridCantorSet(Fraction(parse_number(prov["x_step"])), -R)
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"incomplete Cantor provenance: {exc}") from exc
