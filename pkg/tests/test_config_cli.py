import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from combqlogic.cli import main
from combqlogic.config import ConfigError, load_config, parse_config, parse_quantity, sio_plus_profile
from combqlogic.tables import read_csv, write_csv


@pytest.mark.parametrize(
    "text, dim, expected",
    [
        ("21.51 GHz", "frequency", 21.51e9),
        ("33.1kHz", "frequency", 33.1e3),
        ("70 ns", "time", 70e-9),
        ("383 nm", "length", 383e-9),
        ("1e7 W/m2", "intensity", 1e7),
        ("1 mW/nm", "spectral_density", 1e6),
        ("0.9", "number", 0.9),
    ],
)
def test_parse_quantity(text, dim, expected):
    assert parse_quantity(text, dim) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "text, dim, message",
    [("21.51", "frequency", "missing unit"), ("5 ms", "frequency", "does not measure"),
     ("abc", "time", "not a number"), ("0.5 Hz", "number", "takes no unit")],
)
def test_parse_quantity_errors(text, dim, message):
    with pytest.raises(ConfigError, match=message):
        parse_quantity(text, dim)


@given(st.floats(1e-3, 1e3), st.sampled_from(["Hz", "kHz", "MHz", "GHz"]))
def test_units_scale(v, unit):
    scale = {"Hz": 1, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}[unit]
    assert parse_quantity(f"{v!r} {unit}", "frequency") == pytest.approx(v * scale, rel=1e-15)


def test_profile_defaults():
    cfg = sio_plus_profile()
    phys = cfg.physics()
    assert phys.R_s == pytest.approx(0.2857142857, rel=1e-9)
    assert phys.eta == 0.1
    assert cfg.trap.cool_duration == pytest.approx(100e-6)


def test_override_and_line_numbers():
    cfg = parse_config("[comb]\nf_rep = 81 MHz\n\n[run]\nseed = 7  # comment\n")
    assert cfg.comb.f_rep == 81e6 and cfg.seed == 7
    with pytest.raises(ConfigError, match=r"cfg:3: .*missing unit"):
        parse_config("[comb]\n# note\nf_rep = 81\n", source="cfg")


@pytest.mark.parametrize(
    "text, message",
    [
        ("[comb]\nbogus = 1 Hz\n", "unknown key"),
        ("[nowhere]\n", "unknown section"),
        ("f_rep = 1 Hz\n", "outside any section"),
        ("[comb]\nf_rep = 1 MHz\nf_rep = 2 MHz\n", "duplicate key"),
        ("[run]\nj_max = 3.5\n", "expected an integer"),
        ("[comb]\nf_rep 80 MHz\n", "key = value"),
        ("[comb]\nf_rep = -80 MHz\n", "invalid value"),
        ("[trap]\ncool_efficiency = 1.5\n", "invalid value"),
        ("[comb]\npolarizations = 0,3\n", "polarizations"),
    ],
)
def test_config_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_unknown_profile():
    with pytest.raises(ConfigError):
        load_config(None, profile="nope")


def test_csv_round_trip(tmp_path):
    rows = [(1, 0.1 + 0.2, math.pi), (2, 1e-300, -0.0)]
    path = write_csv(tmp_path / "t.csv", ["J", "a", "b"], rows)
    back = read_csv(path)
    np.testing.assert_array_equal(back["a"], [0.1 + 0.2, 1e-300])
    np.testing.assert_array_equal(back["b"], [math.pi, -0.0])


def _run(tmp_path, capsys, *argv):
    code = main([*argv, "--out", str(tmp_path)])
    out = capsys.readouterr()
    return code, out


def test_cli_boltzmann(tmp_path, capsys):
    code, out = _run(tmp_path, capsys, "boltzmann")
    assert code == 0
    summary = json.loads(out.out)
    assert summary["modal_J"] == 12
    table = read_csv(tmp_path / "boltzmann.csv")
    assert table["population"].sum() == pytest.approx(1.0)


def test_cli_match(tmp_path, capsys):
    code, out = _run(tmp_path, capsys, "match")
    assert code == 0
    table = read_csv(tmp_path / "match.csv")
    assert len(table["f_rep"]) == json.loads(out.out)["solutions"]


def test_cli_cool_seeded_outputs_identical(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[cooling]\nj_top = 5\ncycles_per_level = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["cool", "--config", str(cfg), "--engine", "monte_carlo", "--n-traj", "300",
                     "--seed", "11", "--out", str(d)]) == 0
    capsys.readouterr()
    assert (a / "cool.csv").read_bytes() == (b / "cool.csv").read_bytes()


def test_cli_pump_scan_detect(tmp_path, capsys):
    for cmd in ("pump", "scan", "detect"):
        code, out = _run(tmp_path, capsys, cmd)
        assert code == 0, out.err
    assert (tmp_path / "scan.csv").exists()
    assert json.loads((tmp_path / "detect.json").read_text())


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[comb]\nf_rep = 80\n")
    code = main(["boltzmann", "--config", str(cfg), "--error-json", "--out", str(tmp_path)])
    out = capsys.readouterr()
    assert code == 1
    assert json.loads(out.out)["error"]["kind"] == "config"
    assert "bad.cfg:2" in out.err


def test_cli_physics_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "hot.cfg"
    cfg.write_text("[run]\nj_max = 10\n")
    code, out = _run(tmp_path, capsys, "boltzmann", "--config", str(cfg))
    assert code == 2
    assert "discards" in out.err
