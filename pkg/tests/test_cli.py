import csv
import json
from pathlib import Path

import numpy as np
import pytest

from cathtwin.cli import main
from cathtwin.runrecord import record_hash, verify_run_record

DATA = Path(__file__).parent / "data"

FAST_SIM_CONFIG = """
seed = 5
[simulate]
profiles = 2
max_time_s = 120.0
dt = 0.05
"""


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "cathtwin" in capsys.readouterr().out


def test_unknown_config_key_is_machine_readable(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[env]\nnope = 1\n")
    rc = main(["phantom", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"
    assert "nope" in err["message"]


def test_missing_policy_is_machine_readable(tmp_path, capsys):
    rc = main(["evaluate", "--policy", str(tmp_path / "none.json"),
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert json.loads(capsys.readouterr().err)["error"] == "cli"


def test_phantom_writes_record(tmp_path):
    out = tmp_path / "ph"
    assert main(["phantom", "--out", str(out)]) == 0
    assert (out / "phantom.stl").exists()
    assert (out / "target.json").exists()
    assert verify_run_record(out)
    target = json.loads((out / "target.json").read_text())
    assert len(target["p1"]) == 3


def test_simulate_deterministic_byte_identical(tmp_path):
    """Same config + seed twice: identical record hashes, file for file."""
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(FAST_SIM_CONFIG)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["simulate", "--config", str(cfg), "--mode", "master_slave",
                   "--out", str(out)])
        assert rc == 0
        outs.append(out)
    assert record_hash(outs[0]) == record_hash(outs[1])
    for rel in ("metrics.csv", "trajectories/run_000.jsonl",
                "trajectories/run_001.jsonl", "config.snapshot"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()


def test_metrics_matches_golden_csv(tmp_path):
    """Recompute metrics on the checked-in sample run; match the golden CSV
    produced by the brute-force oracle sums."""
    out_csv = tmp_path / "recomputed.csv"
    rc = main(["metrics", "--run", str(DATA / "sample_run"), "--out", str(out_csv)])
    assert rc == 0
    with open(DATA / "sample_run" / "metrics.csv") as f:
        golden = list(csv.DictReader(f))
    with open(out_csv) as f:
        got = list(csv.DictReader(f))
    assert len(golden) == len(got)
    numeric = ["accumulated_error_px", "projected_trajectory_length_px",
               "tip_trajectory_length_mm", "motion_efficiency"]
    for g, r in zip(golden, got):
        for col in numeric:
            assert float(r[col]) == pytest.approx(float(g[col]), abs=1e-9)


def test_compare_reports_direction(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    rng = np.random.default_rng(0)
    for path, loc in ((a, 5.0), (b, 50.0)):
        rows = "\n".join(repr(float(x)) for x in rng.normal(loc, 1.0, 10))
        path.write_text("intervention_time_s\n" + rows + "\n")
    out = tmp_path / "cmp.json"
    rc = main(["compare", "--a", str(a), "--b", str(b),
               "--column", "intervention_time_s", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["p_value"] < 0.001
    assert doc["a"]["mean"] < doc["b"]["mean"]
    assert doc["test_used"] in ("t", "mannwhitney")


def test_fit_shape_cli_fast(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[shape_fit]\nn = 40\nepochs = 40\n")
    out = tmp_path / "fs"
    assert main(["fit-shape", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads((out / "fit_report.json").read_text())
    assert doc["n_train"] + doc["n_val"] == 40
    from cathtwin.shapemodel import ShapeModel
    ShapeModel.from_json((out / "shapemodel.json").read_text())


def test_train_cli_tiny(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[sac]\nepisodes = 2\nwarmup_steps = 50\nbatch_size = 16\n"
                   "\n[env]\nmax_steps = 20\n")
    out = tmp_path / "tr"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "policy.json").exists()
    with open(out / "curves.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2


def test_evaluate_cli_with_tiny_policy(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[sac]\nepisodes = 1\nwarmup_steps = 20\nbatch_size = 8\n"
                   "\n[env]\nmax_steps = 15\n")
    tr = tmp_path / "tr"
    assert main(["train", "--config", str(cfg), "--out", str(tr)]) == 0
    ev = tmp_path / "ev"
    rc = main(["evaluate", "--config", str(cfg), "--policy",
               str(tr / "policy.json"), "--n", "3", "--out", str(ev)])
    assert rc == 0
    doc = json.loads((ev / "evaluation.json").read_text())
    assert doc["n"] == 3
    assert 0.0 <= doc["success_rate"] <= 1.0
