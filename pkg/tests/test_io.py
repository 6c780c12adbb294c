import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vpcharge import cli_io
from vpcharge.cli_io import ConfigError, config_from_dict, config_hash


def _raw(**over):
    d = {"profile": {"kind": "maxwellian_bump", "epsilon_hole": 0.2, "mass": 0.5},
         "charge": {"eta0": [0.3, 0.0, 0.0]},
         "N": 60, "seed": 3, "T": 0.02, "dt": 0.005, "record_every": 1, "snapshot_every": 2,
         "flow_probes": 3, "flow_times": 2, "grid_cells": 8}
    d.update(over)
    return d


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d.pop("profile"), "profile"),
    (lambda d: d.update(dt=-1e-3), "dt"),
    (lambda d: d.update(K0=99.0), "K0"),
    (lambda d: d.update({"lambda": 1.5}), "lambda"),
    (lambda d: d.update(bogus=1), "bogus"),
    (lambda d: d["profile"].update(kind="plasma"), "profile.kind"),
    (lambda d: d["profile"].update(radius=2), "profile.radius"),
    (lambda d: d.update(N=10.5), "N"),
    (lambda d: d["charge"].update(xi0=[0, 0]), "charge.xi0"),
    (lambda d: d.update(moments=[]), "moments"),
    (lambda d: d.update(checks=["nope"]), "checks"),
    (lambda d: d.update(T=1e-4), "T"),
])
def test_config_errors_name_the_field(mutate, path):
    raw = _raw()
    mutate(raw)
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert exc.value.path == path


def test_parse_config_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        cli_io.parse_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        cli_io.parse_config(bad)


def test_hash_is_stable_and_sensitive():
    a = config_from_dict(_raw())
    b = config_from_dict(json.loads(json.dumps(_raw())))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(config_from_dict(_raw(seed=4)))
    assert len(config_hash(a)) == 64


def test_output_dir_env(monkeypatch, tmp_path):
    cfg = config_from_dict(_raw(output_dir="somewhere"))
    monkeypatch.delenv(cli_io.OUTPUT_ENV, raising=False)
    assert str(cli_io.output_dir(cfg)) == "somewhere"
    monkeypatch.setenv(cli_io.OUTPUT_ENV, str(tmp_path))
    assert cli_io.output_dir(cfg) == tmp_path


def test_timeseries_round_trip(tmp_path):
    cols = ["t", "a", "b"]
    rows = [[0.0, 1 / 3, np.pi], [0.1, -2.5e-300, 1e300]]
    p = tmp_path / "ts.csv"
    cli_io.write_timeseries(p, cols, rows, "abc")
    sha, c2, r2 = cli_io.read_timeseries(p)
    assert sha == "abc" and c2 == cols
    assert all(np.array_equal(np.array(a), b) for a, b in zip(rows, r2))
    with pytest.raises(ValueError):
        cli_io.write_timeseries(p, cols, [[1.0]], "abc")
    (tmp_path / "plain.csv").write_text("t\n0\n")
    with pytest.raises(ValueError):
        cli_io.read_timeseries(tmp_path / "plain.csv")


def test_snapshot_bitwise_round_trip(tmp_path):
    st = cli_io.build_initial_state(config_from_dict(_raw()))
    p = tmp_path / "snap.csv"
    cli_io.write_snapshot(p, st, "sha", 0)
    back = cli_io.load_snapshot(p)
    np.testing.assert_array_equal(back.ensemble.positions, st.ensemble.positions)
    np.testing.assert_array_equal(back.ensemble.velocities, st.ensemble.velocities)
    np.testing.assert_array_equal(back.ensemble.weights, st.ensemble.weights)
    np.testing.assert_array_equal(back.charge.eta, st.charge.eta)
    assert back.H0 == st.H0 and back.interaction == st.interaction


def test_svg_is_xml_and_deterministic(tmp_path):
    t = np.linspace(0, 1, 11)
    for name in ("a.svg", "b.svg"):
        cli_io.render_svg(tmp_path / name, t, {"y": t ** 2}, title="y", config_sha="deadbeef")
    ET.parse(tmp_path / "a.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert b"deadbeef" in (tmp_path / "a.svg").read_bytes()


def test_simulate_load_verify_report(tmp_path):
    cfg = config_from_dict(_raw(checks=["conservation", "energy_velocity", "virial", "flow_bounds"]))
    res = cli_io.simulate(cfg, tmp_path)
    assert len(res.rows) == cfg.steps + 1
    assert (tmp_path / "config.json").is_file()
    snaps = sorted((tmp_path / "snapshots").glob("step_*.csv"))
    assert len(snaps) == 3
    loaded = cli_io.load_run(cfg, tmp_path)
    assert loaded.config_sha == res.config_sha and len(loaded.records) == len(res.records)
    np.testing.assert_array_equal(np.array(loaded.rows), np.array(res.rows))
    assert cli_io.load_run(config_from_dict(_raw(seed=9)), tmp_path) is None
    doc = cli_io.verify(cfg, tmp_path)
    assert [c["check"] for c in doc["checks"]] == list(cfg.checks)
    assert doc["passed"]
    assert json.loads((tmp_path / "report.json").read_text())["config_sha256"] == res.config_sha
    paths = cli_io.report(cfg, tmp_path)
    assert len(paths) == 4 and all(p.is_file() for p in paths)


def test_report_without_run(tmp_path):
    with pytest.raises(FileNotFoundError):
        cli_io.report(config_from_dict(_raw()), tmp_path)


def test_simulate_is_bitwise_reproducible(tmp_path):
    cfg = config_from_dict(_raw())
    cli_io.simulate(cfg, tmp_path / "a")
    cli_io.simulate(cfg, tmp_path / "b")
    for rel in ["timeseries.csv", "snapshots/step_0000004.csv"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_minimal_config_defaults():
    cfg = config_from_dict({"profile": {"kind": "maxwellian_bump"}, "N": 10, "seed": 0, "T": 1.0})
    assert cfg.dt == 1e-3 and cfg.K0 == 100.0 and cfg.lam == 1.0
    assert cfg.as_dict()["lambda"] == 1.0
