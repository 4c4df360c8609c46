import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from spectral_kde.cli import DEFAULT_CONFIGS, SCHEMAS, main, resolve_config

GOLDEN = Path(__file__).parent / "golden"


def _run(tmp_path, command, cfg=None, *flags, out="out"):
    argv = [command, "--out", str(tmp_path / out)]
    if cfg is not None:
        path = tmp_path / f"{command}-{out}.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    return main(argv + list(flags))


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- configuration ---------------------------------------------------------


def test_schemas_reject_unknown_keys():
    for name, schema in SCHEMAS.items():
        assert schema["additionalProperties"] is False, name


def test_defaults_materialized():
    cfg = resolve_config("estimate", {}, {"seed": None, "threads": None})
    assert cfg["space"] == {"kind": "circle"}
    assert cfg["estimator"]["kind"] == "kernel" and cfg["estimator"]["s"] == 2.0
    assert cfg["seed"] == 20240917 and cfg["n"] == 10000
    bench = resolve_config("bench-rates", None, {"seed": 3, "threads": None})
    assert bench["n_grid"] == DEFAULT_CONFIGS["bench-rates"]["n_grid"] and bench["reps"] == 30 and bench["seed"] == 3


def test_missing_n_grid_is_config_error(tmp_path, capsys):
    assert _run(tmp_path, "bench-rates", {"reps": 3}) == 2
    assert "n_grid" in capsys.readouterr().err


def test_unknown_key_is_config_error(tmp_path):
    assert _run(tmp_path, "net", {"delta": 0.5, "colour": "red"}) == 2
    assert _run(tmp_path, "net", {"space": {"kind": "torus"}}) == 2


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["net", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_dry_run_writes_nothing(tmp_path, capsys):
    assert _run(tmp_path, "estimate", {"n": 100}, "--dry-run") == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["n"] == 100 and echoed["density"] == {"form": "smooth", "s": 2.0}
    assert not (tmp_path / "out").exists()


# -- commands --------------------------------------------------------------


def test_net_command(tmp_path):
    assert _run(tmp_path, "net", {"delta": 0.5}) == 0
    rows = _rows(tmp_path / "out" / "net.csv")
    assert len(rows) == 4 and all(float(r["cell_weight"]) == 0.5 for r in rows)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["outputs"] == ["net.csv"] and manifest["seed"] == 20240917
    assert len(manifest["config_sha256"]) == 64


def test_kernel_eval_command(tmp_path):
    cfg = {"space": {"kind": "sphere2"}, "multiplier": {"kind": "heat"}, "delta": 0.2, "points": 50}
    assert _run(tmp_path, "kernel-eval", cfg) == 0
    rows = _rows(tmp_path / "out" / "kernel.csv")
    assert len(rows) == 50 and set(rows[0]) == {"x0", "x1", "x2", "distance", "kernel"}


def test_kernel_eval_budget_failure(tmp_path):
    cfg = {"space": {"kind": "sphere2", "k_max": 8}, "delta": 0.001}
    assert _run(tmp_path, "kernel-eval", cfg) == 3


def test_estimate_uniform_kernel(tmp_path):
    cfg = {"density": {"form": "uniform"}, "n": 10_000, "estimator": {"kind": "kernel"}}
    assert _run(tmp_path, "estimate", cfg) == 0
    out = tmp_path / "out"
    vals = np.array([float(r["estimate"]) for r in _rows(out / "grid.csv")])
    assert np.max(np.abs(vals - 0.5)) <= 1e-2
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["mass"] == pytest.approx(1.0, abs=1e-12)
    assert sorted(json.loads((out / "manifest.json").read_text())["outputs"]) == [
        "diagnostics.json",
        "estimator.json",
        "grid.csv",
        "samples.csv",
    ]


def test_estimate_from_samples_file(tmp_path):
    assert _run(tmp_path, "estimate", {"n": 300, "density": {"form": "uniform"}}, out="gen") == 0
    cfg = {"samples": str(tmp_path / "gen" / "samples.csv"), "estimator": {"kind": "linear", "J": 3}}
    assert _run(tmp_path, "estimate", cfg, out="reuse") == 0
    rows = _rows(tmp_path / "reuse" / "grid.csv")
    assert math.isnan(float(rows[0]["truth"]))
    cfg["samples"] = str(tmp_path / "missing.csv")
    assert _run(tmp_path, "estimate", cfg, out="bad") == 2


def test_estimate_threshold_golden(tmp_path):
    cfg = {
        "space": {"kind": "circle"},
        "density": {"form": "kinked", "amplitude": 1.0},
        "estimator": {"kind": "threshold", "kappa": 1.0},
        "n": 2048,
    }
    assert _run(tmp_path, "estimate", cfg, "--seed", "11") == 0
    out = tmp_path / "out"
    diag = json.loads((out / "diagnostics.json").read_text())
    gold = json.loads((GOLDEN / "estimate_kinked_threshold.json").read_text())
    assert diag["survivors"] == gold["survivors"] and diag["totals"] == gold["totals"]
    assert diag["lambda_n"] == gold["lambda_n"]
    assert diag["mass"] == pytest.approx(gold["mass"], abs=1e-12)
    # survivor column obeys the hard-zero rule
    rows = _rows(out / "coefficients.csv")
    lam = diag["lambda_n"]
    for r in rows:
        hat, star = float(r["beta_hat"]), float(r["beta_star"])
        if r["survivor"] == "1":
            assert abs(hat) > 2 * lam and star == hat
        else:
            assert abs(hat) <= 2 * lam and star == 0.0
    per_level = [sum(1 for r in rows if r["j"] == str(j) and r["survivor"] == "1") for j in range(len(gold["survivors"]))]
    assert per_level == gold["survivors"]


@pytest.mark.parametrize("kind", ["circle", "sphere2", "su2"])
def test_frame_check_golden(tmp_path, kind):
    cfg = {"space": {"kind": kind}, "J_max": 3, "functions": 5}
    assert _run(tmp_path, "frame-check", cfg, "--seed", "7") == 0
    got = _rows(tmp_path / "out" / "frame_check.csv")
    want = _rows(GOLDEN / f"frame_check_{kind}.csv")
    assert [r["check"] for r in got] == [r["check"] for r in want]
    for g, w in zip(got, want):
        assert g["pass"] == w["pass"] == "True"
        if g["check"] == "reconstruction_rel_sup":
            assert float(g["value"]) <= 1e-12
        else:
            assert float(g["value"]) == pytest.approx(float(w["value"]), rel=1e-9, abs=1e-15)


def test_frame_check_shallow_frame_exits_3(tmp_path, capsys):
    assert _run(tmp_path, "frame-check", {"J_max": 3, "n": 4096}) == 3
    assert "J_n" in capsys.readouterr().err


def test_bench_rates_small(tmp_path, capsys):
    cfg = {"n_grid": [128, 256, 512, 1024], "reps": 3, "density": {"form": "smooth", "s": 2.0}}
    assert _run(tmp_path, "bench-rates", cfg, "--seed", "5") == 0
    assert "vs theory -0.4000" in capsys.readouterr().out
    out = tmp_path / "out"
    assert (out / "report.csv").read_text().startswith("row,n,rep,error")
    rep = json.loads((out / "report.json").read_text())
    assert rep["theory_slope"] == pytest.approx(-0.4) and len(rep["entries"]) == 4
    assert _run(tmp_path, "bench-rates", cfg, "--seed", "5", "--threads", "2", out="again") == 0
    assert (out / "report.csv").read_bytes() == (tmp_path / "again" / "report.csv").read_bytes()
    m1 = json.loads((out / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "again" / "manifest.json").read_text())
    assert m1["config_sha256"] != m2["config_sha256"]  # threads is part of the echoed config
    assert m1["seed"] == m2["seed"] == 5


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "spectral_kde.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in ("estimate", "bench-rates", "frame-check", "net", "kernel-eval"):
        assert name in res.stdout
