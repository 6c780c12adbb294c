import json

import pytest

from vpcharge.cli import main


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({
        "profile": {"kind": "maxwellian_bump", "epsilon_hole": 0.2},
        "N": 50, "seed": 1, "T": 0.01, "dt": 0.005, "record_every": 1, "snapshot_every": 1,
        "checks": ["conservation", "energy_velocity"], "output_dir": str(tmp_path / "run")}))
    return p


def test_constants_prints_table(capsys):
    assert main(["constants", "--m", "6", "--m0", "7", "--T", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert 100 <= doc["c0_m"] <= 1000
    assert "lambda" in doc


def test_simulate_verify_report(config, tmp_path, capsys):
    assert main(["simulate", str(config)]) == 0
    assert (tmp_path / "run" / "timeseries.csv").is_file()
    assert main(["verify", str(config)]) == 0
    out = capsys.readouterr().out
    assert "pass conservation" in out
    assert main(["report", str(config), "--output", str(tmp_path / "run")]) == 0
    assert (tmp_path / "run" / "energy.svg").is_file()


def test_errors_exit_two(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "none.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": 10}))
    assert main(["verify", str(bad)]) == 2
    err = capsys.readouterr().err
    assert err.count("error:") == 2 and "profile" in err
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_constants_long_horizon(capsys):
    assert main(["constants", "--m", "6", "--m0", "7", "--T", "10"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["T"] == 10 and doc["c0_m"] > 0


def test_bundled_example_config(tmp_path, capsys):
    from pathlib import Path
    from vpcharge.cli_io import parse_config, read_timeseries
    path = Path(__file__).parents[1] / "configs" / "example.json"
    cfg = parse_config(path)
    assert main(["simulate", str(path), "--output", str(tmp_path)]) == 0
    _, cols, rows = read_timeseries(tmp_path / "timeseries.csv")
    assert len(rows) >= cfg.T / cfg.dt / cfg.record_every
    assert all(len(r) == len(cols) for r in rows)
