import csv
import json
import math

import numpy as np
import pytest

from clse import cli


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def base_config(**extra):
    cfg = {
        "scenario": {"seed": 1, "L": 7, "K": 3, "lambda": 0.99,
                     "mu": 1000.0, "eta": 0.1},
        "run": {"n_trials": 4, "n_iters": 300, "warmup": 200,
                "steady_window": 100, "master_seed": 7},
    }
    cfg.update(extra)
    return cfg


def test_to_db():
    assert cli.to_db(100.0) == pytest.approx(20.0)
    assert cli.to_db(0.0) == "-inf"


def test_load_config_round_trip(tmp_path):
    path = write_config(tmp_path, base_config())
    cfg = cli.load_config(path)
    assert cfg["scenario"]["L"] == 7


def test_unknown_key_rejected_by_name(tmp_path):
    path = write_config(tmp_path, base_config(run={"n_trails": 4}))
    with pytest.raises(cli.ConfigError, match="n_trails"):
        cli.load_config(path)
    path = write_config(tmp_path, {"scenario": {}, "extra_section": {}})
    with pytest.raises(cli.ConfigError, match="extra_section"):
        cli.load_config(path)


def test_malformed_json_fails(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(cli.ConfigError, match="malformed"):
        cli.load_config(str(path))
    assert cli.main(["predict", "--config", str(path)]) == 2


def test_build_scenario_explicit_matrices(tmp_path):
    from clse.model import generate_scenario
    sc = generate_scenario(1, 7, 3, 0.99, 1e3, 0.1)
    cfg = {"scenario": {"h": sc.h.tolist(), "C": sc.C.tolist(),
                        "f": sc.f.tolist(), "R": sc.R.tolist(),
                        "lambda": 0.99, "mu": 1e3, "eta": 0.1}}
    built = cli.build_scenario(cfg)
    assert np.allclose(built.h, sc.h)
    with pytest.raises(cli.ConfigError, match="scenario.R"):
        cli.build_scenario({"scenario": {"h": sc.h.tolist(),
                                         "C": sc.C.tolist(),
                                         "f": sc.f.tolist()}})


def test_seed_flag_overrides_scenario_seed():
    cfg = base_config()
    assert cli.build_scenario(cfg, seed_override=42).seed == 42
    assert cli.build_scenario(cfg).seed == 1


def test_predict_writes_consistent_db(tmp_path, capsys):
    path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    rc = cli.main(["predict", "--config", path, "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "prediction.json").read_text())
    assert payload["msd_rcls_db"] == pytest.approx(
        10.0 * math.log10(payload["msd_rcls"]), abs=1e-12)
    assert payload["msm_cls_db"] == "-inf" and payload["msm_cls"] == 0.0


def test_simulate_outputs(tmp_path):
    path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--config", path, "--out", str(out), "--serial"])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_trials"] == 4
    assert summary["steady_msd"] > 0.0
    with open(out / "curves.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["iteration", "msd", "msm", "mean_updates"]
    assert len(rows) == 300
    assert float(rows[-1]["msd"]) == pytest.approx(summary["steady_msd"], rel=2.0)


def test_simulate_needs_output_dir(tmp_path):
    path = write_config(tmp_path, base_config())
    assert cli.main(["simulate", "--config", path]) == 2


def test_sweep_csv(tmp_path):
    cfg = base_config(sweep={"axis": "mu", "grid": [10.0, 1000.0]})
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    rc = cli.main(["sweep", "--config", path, "--out", str(out), "--serial"])
    assert rc == 0
    with open(out / "sweep_mu.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["axis_value", "steady_msd_db", "steady_msm_db",
                             "theory_msd_db", "theory_msm_db", "stderr_db",
                             "n_trials", "seed"]
    assert [float(r["axis_value"]) for r in rows] == [10.0, 1000.0]
    # larger weight pushes the mismatch down
    assert float(rows[1]["steady_msm_db"]) < float(rows[0]["steady_msm_db"])


def test_verify_report_structure(tmp_path, capsys):
    cfg = base_config(verify={"criteria": ["C1", "C11"]})
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    rc = cli.main(["verify", "--config", path, "--out", str(out), "--serial"])
    assert rc == 0
    payload = json.loads((out / "verify.json").read_text())
    assert payload["all_passed"] is True
    assert [r["id"] for r in payload["criteria"]] == ["C1", "C11"]
    for rec in payload["criteria"]:
        assert {"id", "name", "measured", "threshold", "passed"} <= set(rec)
    text = capsys.readouterr().out
    assert "[PASS] C1" in text


def test_verify_broken_tolerance_fails(tmp_path):
    cfg = base_config(verify={"criteria": ["C1"], "break_tolerance": True})
    path = write_config(tmp_path, cfg)
    assert cli.main(["verify", "--config", path, "--serial"]) == 1
