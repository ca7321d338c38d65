import json
import os

import pytest

from congested_shocks.cli import (
    DEFAULTS,
    ConfigError,
    main,
    parse_config_text,
    resolve_config,
)


def _manifest(d):
    with open(os.path.join(d, "manifest.json")) as fh:
        return json.load(fh)


def test_parse_config_text():
    cfg = parse_config_text("# comment\nmodel.epsilon = 1e-4  # trailing\n\nmodel.gamma=1\n")
    assert cfg == {"model.epsilon": "1e-4", "model.gamma": "1"}
    with pytest.raises(ConfigError):
        parse_config_text("model.epsilon 1e-4")


def test_resolve_config_layers(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("model.epsilon = 1e-4\npert.allow_nonzero_mass = yes\n")
    cfg = resolve_config(str(path), ["model.epsilon=1e-5", "run.stride=3"])
    assert cfg["model.epsilon"] == 1e-5
    assert cfg["pert.allow_nonzero_mass"] is True
    assert cfg["run.stride"] == 3
    assert cfg["model.gamma"] == DEFAULTS["model.gamma"]
    with pytest.raises(ConfigError):
        resolve_config(None, ["model.epsilom=1"])
    with pytest.raises(ConfigError):
        resolve_config(None, ["run.stride=two"])


@pytest.mark.parametrize("override", [
    "model.epsilon=0.5",  # v_minus = 1 + 0.5**0.5 exceeds v_plus = 1.5
    "no.such_key=1",
    "model.gamma=abc",
])
def test_rejected_config_exits_2(tmp_path, override):
    out = tmp_path / "o"
    code = main(["profile", "--out", str(out), "--set", override])
    assert code == 2
    m = _manifest(out)
    assert not m["passed"] and m["error"].startswith("config")


def test_profile_command_is_deterministic_and_manifest_last(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert main(["profile", "--out", str(d), "--set", "model.epsilon=1e-2",
                     "--set", "profile.n_limit=101"]) == 0
    m = _manifest(dirs[0])
    assert m["passed"] and m["command"] == "profile"
    assert set(m["outputs"]) == {"profile_eps0.01.csv", "profile_eps0.01.dat",
                                 "limit.dat", "profiles.csv"}
    for name in m["outputs"]:
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b
    t_manifest = os.path.getmtime(dirs[0] / "manifest.json")
    assert all(os.path.getmtime(dirs[0] / n) <= t_manifest for n in m["outputs"])


def test_simulate_unperturbed_run_does_not_drift(tmp_path):
    out = tmp_path / "sim"
    code = main(["simulate", "--out", str(out), "--set", "model.epsilon=1e-2",
                 "--set", "pert.shape=none", "--set", "grid.x_lo=-6",
                 "--set", "grid.dx=0.02", "--set", "run.T=0.2"])
    m = _manifest(out)
    assert code == 0, m
    assert m["passed"]
    assert "energy.csv" in m["outputs"] and "summary.json" in m["outputs"]


def test_report_flags_missing_inputs(tmp_path):
    good = tmp_path / "good"
    assert main(["profile", "--out", str(good), "--set", "model.epsilon=1e-2",
                 "--set", "profile.n_limit=11"]) == 0
    rep = tmp_path / "rep"
    code = main(["report", "--out", str(rep), str(good), str(tmp_path / "missing")])
    assert code == 1
    text = (rep / "summary.txt").read_text()
    assert "MISSING" in text and "PASS" in text


def test_sweep_runs_each_value(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--out", str(out), "--set", "sweep.values=1e-2,5e-3",
                 "--set", "profile.n_limit=11"])
    assert code == 0
    assert _manifest(out / "run_000")["config"]["model.epsilon"] == 1e-2
    assert _manifest(out / "run_001")["config"]["model.epsilon"] == 5e-3
    assert (out / "sweep.csv").read_text().count("\n") == 3
