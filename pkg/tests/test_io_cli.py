import json
from fractions import Fraction
from pathlib import Path

import pytest

from rihom.cli import main
from rihom.construct_cantor import perturb_cantor
from rihom.io import BundleError, cantor_of, load_bundle, load_system, save_bundle, save_system
from rihom.samples import offset_example_system, symmetric_drift_system
from rihom.systems import system_to_dict

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"
S_STAR = str(SYSTEMS / "s_star.json")
P_ONE = str(SYSTEMS / "p_one.json")
OFFSET = str(SYSTEMS / "offset_example.json")


def test_system_round_trip(tmp_path):
    for F in (symmetric_drift_system(), offset_example_system()):
        path = save_system(F, tmp_path / "f.json")
        assert system_to_dict(load_system(path)) == system_to_dict(F)


def test_bundle_round_trip(tmp_path):
    c = perturb_cantor(symmetric_drift_system(), 0.5)
    save_bundle(tmp_path / "b", c.system, c.descriptor(), c.report())
    G, desc, rep = load_bundle(tmp_path / "b")
    assert system_to_dict(G) == system_to_dict(c.system)
    assert desc == json.loads(json.dumps(c.descriptor()))
    assert rep["d_m_below_eps"] is True
    S = cantor_of(G)
    assert S.cell_width == c.cantor.cell_width and S.origin == c.cantor.origin
    for x in (Fraction(0), S.origin, S.origin + S.cell_width / 3):
        for g0, g1 in zip(G.maps, c.system.maps):
            assert g0.exact(x) == g1.exact(x)


def test_unreadable_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(BundleError):
        load_system(bad)
    with pytest.raises(BundleError):
        load_system(tmp_path / "missing.json")
    with pytest.raises(BundleError):
        load_bundle(tmp_path / "nowhere")


def test_validate_exit_codes(tmp_path, capsys):
    assert main(["validate", S_STAR]) == 0
    assert "valid" in capsys.readouterr().out
    assert main(["validate", P_ONE]) == 1
    assert "invalid" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text('{"p": "1/2", "maps": {"F0": {"breakpoints": [["0", "x"]]}}}')
    assert main(["validate", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_usage_errors(capsys):
    assert main(["perturb", S_STAR, "--mode", "cantor", "--eps", "0"]) == 2
    assert main(["perturb", S_STAR, "--mode", "other", "--eps", "0.1"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_perturb_rejects_invalid_input(tmp_path, capsys):
    assert main(["perturb", P_ONE, "--mode", "cantor", "--eps", "0.1", "--out", str(tmp_path / "x")]) == 1
    assert not (tmp_path / "x").exists()
    capsys.readouterr()


@pytest.mark.parametrize("mode", ["cantor", "minimal"])
def test_perturb_writes_a_bundle(tmp_path, capsys, mode):
    src = OFFSET if mode == "minimal" else S_STAR
    out = tmp_path / mode
    assert main(["perturb", src, "--mode", mode, "--eps", "0.1", "--out", str(out)]) == 0
    capsys.readouterr()
    G, desc, rep = load_bundle(out)
    assert desc["kind"] == mode
    assert rep["d_m_below_eps"] is True and rep["valid"] is True
    assert main(["validate", str(out)]) == 0
    capsys.readouterr()
    assert main(["distance", src, str(out)]) == 0
    d_m = float(capsys.readouterr().out.split("d_m = ")[1].split()[0])
    assert d_m < 0.1


def test_distance_to_itself_is_zero(capsys):
    assert main(["distance", S_STAR, S_STAR]) == 0
    out = capsys.readouterr().out
    assert "d_m = 0.0" in out and "d_0 = 0.0" in out


def test_orbit_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["orbit", S_STAR, "--seed", "7", "--samples", "500", "--out", str(a)]) == 0
    assert main(["orbit", S_STAR, "--seed", "7", "--samples", "500", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "step,map,x_real,x_unit"
    assert len(lines) == 501
    assert main(["orbit", S_STAR, "--seed", "8", "--samples", "500", "--out", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()
    capsys.readouterr()


def test_stationary_csv(tmp_path, capsys):
    out = tmp_path / "cdf.csv"
    assert main(["stationary", S_STAR, "--tol", "0.01", "--max-rows", "50", "--out", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "x_real,x_unit,cdf_lower,cdf_upper"
    assert 2 <= len(rows) - 1 <= 50
    for row in rows[1:]:
        x, u, lo, hi = map(float, row.split(","))
        assert 0 <= lo <= hi <= 1 and 0 <= u <= 1
    capsys.readouterr()


def test_singular_diagnose_needs_a_cantor_system(capsys):
    assert main(["diagnose", S_STAR, "--mode", "singular"]) == 1
    capsys.readouterr()
