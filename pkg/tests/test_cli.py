import io
import json
import shutil
import subprocess

import pytest

from geoflow import __version__
from geoflow.cli import DEFAULTS, cmd_list, dumps, main, resolve_config
from geoflow.errors import InvalidConfig

ESCH = {"scenario": {"name": "eschenburg", "parameters": {"k": 1, "l": -1, "p": 2, "q": 2}}}
SHORT = {"integrator": {"T": 1.0, "h": 1e-2}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, command, cfg, *extra, out="out"):
    path = cfg if isinstance(cfg, str) else write(tmp_path, cfg)
    return main([command, "--config", path, "--out", str(tmp_path / out), *extra])


# --- list -----------------------------------------------------------------------------------

def test_list_text(capsys):
    assert main(["list"]) == 0
    text = capsys.readouterr().out
    for name in ("eschenburg", "gromoll_meyer", "flag"):
        assert name in text


def test_list_json(capsys):
    assert main(["list", "--json"]) == 0
    entries = json.loads(capsys.readouterr().out)
    assert [e["name"] for e in entries] == ["eschenburg", "gromoll_meyer", "flag"]


def test_list_empty_catalog(capsys, monkeypatch):
    buf = io.StringIO()
    assert cmd_list(catalog={}, as_json=True, stream=buf) == 0
    assert json.loads(buf.getvalue()) == []
    monkeypatch.setenv("GEOFLOW_EMPTY_CATALOG", "1")
    assert main(["list", "--json"]) == 0
    assert json.loads(capsys.readouterr().out) == []


# --- verify ------------------------------------------------------------------------------

def test_verify_eschenburg_passes(tmp_path):
    assert run(tmp_path, "verify", {**ESCH, **SHORT}) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["torus_dimension"] == 2
    assert report["passed"] and all(c["passed"] for c in report["checks"].values())
    assert report["version"] == __version__ and report["seed"] == 0
    # every default is echoed for provenance
    assert set(DEFAULTS) <= set(report["config"])
    assert report["config"]["tolerances"]["tol_rank"] == 1e-8


def test_verify_mis_tolerance_exit_2(tmp_path):
    cfg = {**ESCH, "tolerances": {"tol_rank": 1e-1}, "checks": ["completeness"]}
    assert run(tmp_path, "verify", cfg) == 2
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["checks"]["completeness"]["ambiguous_count"] == 20
    assert not report["passed"]


def test_verify_failing_check_exit_2(tmp_path):
    cfg = {**ESCH, "family": ["left-polys"], "checks": ["completeness"]}
    assert run(tmp_path, "verify", cfg) == 2


@pytest.mark.parametrize("cfg", [
    {"bogus": 1},
    {"scenario": {"name": "nope"}},
    {"scenario": {"name": "eschenburg", "parameters": {"z": 1}}},
    {"algebra": "su(3)"},  # regularity/torus/conservation need a scenario
    {"algebra": "su(2)", **ESCH},
    {**ESCH, "integrator": {"h": -1}},
    {**ESCH, "metric": {"left": {"a": [1, 1, -2], "b": [1, 2, -3]}}},  # singular a
    {**ESCH, "family": ["shift"]},  # no sectional left metric
])
def test_verify_config_errors_exit_1(tmp_path, capsys, cfg):
    assert run(tmp_path, "verify", cfg) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_json_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["verify", "--config", str(p)]) == 1
    assert "cannot read config" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 1


def test_bad_arguments_exit_1(capsys):
    assert main(["verify"]) == 1
    assert main(["frobnicate"]) == 1


def test_verify_json_stdout(tmp_path, capsys):
    cfg = {**ESCH, "checks": ["torus_dimension"]}
    assert run(tmp_path, "verify", cfg, "--json") == 0
    out = capsys.readouterr().out
    assert json.loads(out)["torus_dimension"] == 2


def test_verify_other_scenarios(tmp_path):
    for name in ("gromoll_meyer", "flag"):
        cfg = {"scenario": {"name": name}, **SHORT}
        assert run(tmp_path, "verify", cfg, out=name) == 0


def test_verify_sum_metric_config(tmp_path):
    cfg = {**ESCH, **SHORT, "checks": ["conservation"],
           "metric": {"left": {"a": [1, 2, -3], "b": [0.2, 2.4, -2.6], "D": [[1.5, 0.2], [0.2, 1.0]]},
                      "right": {"a": [3, -1, -2], "b": [3.9, -1.1, -2.8]}}}
    assert run(tmp_path, "verify", cfg) == 0


# --- simulate ---------------------------------------------------------------------------------

def test_simulate_bi_invariant_su3(tmp_path):
    cfg = {"algebra": "su(3)", "initial": {"kind": "random"}, "integrator": {"T": 10.0, "h": 1e-3}}
    assert run(tmp_path, "simulate", cfg, out="a") == 0
    rows = (tmp_path / "a" / "trajectory.csv").read_text().splitlines()
    assert len(rows) == 1 + 10001
    summary = json.loads((tmp_path / "a" / "simulate.json").read_text())
    assert summary["relative_drift"]["H"] <= 1e-8
    assert summary["geodesic_error"] <= 1e-6
    assert run(tmp_path, "simulate", cfg, out="b") == 0
    for name in ("trajectory.csv", "simulate.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_seed_override(tmp_path):
    cfg = {**ESCH, **SHORT}
    assert run(tmp_path, "simulate", cfg, "--seed", "3", out="s3") == 0
    assert run(tmp_path, "simulate", cfg, "--seed", "4", out="s4") == 0
    a = json.loads((tmp_path / "s3" / "simulate.json").read_text())
    assert a["seed"] == 3 and a["initial_kind"] == "horizontal"
    assert abs(a["drift"]["moment[0]"]) <= 1e-12
    assert (tmp_path / "s3" / "trajectory.csv").read_bytes() != (tmp_path / "s4" / "trajectory.csv").read_bytes()


def test_simulate_explicit_and_shift_watch(tmp_path):
    cfg = {"algebra": "su(3)", **SHORT,
           "metric": {"left": {"a": [1, 2, -3], "b": [0.2, 2.4, -2.6]}, "right": None},
           "initial": {"kind": "explicit", "m": [1, 0, 0.5, 0, 0, 0.2, 0.3, -0.1], "g": "random"},
           "watch": ["H", "p2(m+0.5a)", "p3(m+1.0a)"]}
    assert run(tmp_path, "simulate", cfg) == 0
    summary = json.loads((tmp_path / "out" / "simulate.json").read_text())
    assert set(summary["relative_drift"]) == {"H", "p2(m+0.5a)", "p3(m+1.0a)"}


def test_simulate_errors(tmp_path):
    assert run(tmp_path, "simulate", {"algebra": "su(3)", "initial": {"kind": "explicit", "m": [1]}}) == 1
    assert run(tmp_path, "simulate", {"algebra": "su(3)", "watch": ["moment"], **SHORT}) == 1
    assert run(tmp_path, "simulate", {"algebra": "su(3)", "initial": {"kind": "horizontal"}}) == 1


def test_wall_clock_is_opt_in(tmp_path):
    cfg = {**ESCH, "checks": ["torus_dimension"], "record_wall_clock": True}
    assert run(tmp_path, "verify", cfg) == 0
    assert "wall_clock_seconds" in json.loads((tmp_path / "out" / "report.json").read_text())


# --- helpers --------------------------------------------------------------------------------------

def test_dumps_17_digits():
    text = dumps({"x": 0.1, "z": 0.0, "i": 3, "b": True, "n": None})
    assert '"x": 0.10000000000000001' in text
    assert '"z": 0.0' in text and '"i": 3' in text
    assert json.loads(text)["x"] == 0.1


def test_resolve_config_rejects_unknown_nested_keys():
    with pytest.raises(InvalidConfig):
        resolve_config({"integrator": {"dt": 0.1}})
    cfg = resolve_config({"algebra": "su(2)"}, seed=9)
    assert cfg["seed"] == 9 and cfg["integrator"]["h"] == 1e-3


@pytest.mark.skipif(shutil.which("geoflow") is None, reason="console script not installed")
def test_console_script(tmp_path):
    p = write(tmp_path, {**ESCH, "checks": ["torus_dimension"]})
    res = subprocess.run(["geoflow", "verify", "--config", p, "--out", str(tmp_path)], capture_output=True)
    assert res.returncode == 0
    res = subprocess.run(["geoflow", "verify", "--config", str(tmp_path / "nope.json")], capture_output=True)
    assert res.returncode == 1 and res.stderr
