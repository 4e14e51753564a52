import json
import subprocess
import sys

import numpy as np
import pytest

from minid import __version__
from minid.cli import run
from minid.io import load_config, read_grouped, read_samples, read_summary, write_grouped


def _run(tmp_path, *argv, out="out"):
    return run(list(argv) + ["--out", str(tmp_path / out)])


def test_version_entry_point():
    res = subprocess.run([sys.executable, "-m", "minid.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout


def test_condition_gate_exit_code(tmp_path, capsys):
    assert _run(tmp_path, "validate-spec", "--preset", "ntr_gamma", "--target", "posterior-predictive") == 4
    assert "absolute-continuity" in capsys.readouterr().err
    assert _run(tmp_path, "validate-spec", "--preset", "ntr_gamma", out="o2") == 0


def test_config_errors_exit_two(tmp_path):
    assert _run(tmp_path, "simulate-prior", "--spec", str(tmp_path / "missing.toml")) == 2
    assert _run(tmp_path, "simulate-prior", "--preset", "toy_three", "--replicates", "0") == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[model]\npreset = 'nope'\n")
    assert _run(tmp_path, "simulate-prior", "--spec", str(bad)) == 2


def test_empty_data_reproduces_prior_summary(tmp_path):
    data = write_grouped(tmp_path / "empty.csv", [[]])
    common = ["--preset", "toy_three", "--seed", "3", "--replicates", "300", "--horizon", "25"]
    assert _run(tmp_path, "simulate-prior", *common, out="prior") == 0
    assert _run(tmp_path, "posterior-predictive", *common, "--data", str(data), out="post") == 0
    prior = read_summary(tmp_path / "prior" / "prior_summary.csv")
    post = read_summary(tmp_path / "post" / "summary.csv")
    assert np.array_equal(prior["grid"], post["grid"])
    se = np.hypot(prior["se"], post["se"])
    assert np.all(np.abs(prior["mean"] - post["mean"]) <= 3 * se + 1e-12)


def test_deterministic_outputs_and_threads(tmp_path, monkeypatch):
    common = ["posterior-predictive", "--preset", "toy_three", "--seed", "11", "--replicates", "500",
              "--horizon", "20"]
    assert _run(tmp_path, *common, "--deterministic", out="a") == 0
    assert _run(tmp_path, *common, "--deterministic", out="b") == 0
    monkeypatch.setenv("MINID_THREADS", "4")
    assert _run(tmp_path, *common, out="c") == 0
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "summary.csv").read_bytes() == (tmp_path / "c" / "summary.csv").read_bytes()
    man = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert man["settings"]["threads"] == 4
    for key in ("seed", "config_hash", "version", "wall_clock_seconds", "truncation_bounds"):
        assert key in man


def test_simulate_prior_files(tmp_path):
    assert _run(tmp_path, "simulate-prior", "--preset", "levy_copula", "--replicates", "50", "--horizon", "3") == 0
    X = read_samples(tmp_path / "out" / "samples.csv")
    assert X.shape == (150, 2)
    side = json.loads((tmp_path / "out" / "samples.csv.meta.json").read_text())
    assert side["manifest"] == "manifest.json"


def test_prior_moments(tmp_path):
    assert _run(tmp_path, "prior-moments", "--preset", "ntr_gamma") == 0
    res = json.loads((tmp_path / "out" / "moments.json").read_text())["results"]
    assert all("se_or_tol" in r for r in res)


def test_gibbs_diagnostics_toy(tmp_path):
    assert _run(tmp_path, "gibbs-diagnostics", "--preset", "toy_two_family", "--sweeps", "30000", "--seed", "1") == 0
    rep = json.loads((tmp_path / "out" / "gibbs.json").read_text())
    assert rep["tv"] < 0.02


def test_oracle_check(tmp_path, capsys):
    assert _run(tmp_path, "oracle-check", "--seed", "0") == 0
    rep = json.loads((tmp_path / "out" / "oracle.json").read_text())
    assert all(r["passed"] for r in rep["results"])
    assert "PASS" in capsys.readouterr().out


def test_hierarchical_toml_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "model.toml"
    cfg.write_text(
        "[hierarchical]\nd = 2\nT = 2.0\nbase_rate = 0.5\n\n"
        "[hierarchical.root_kernel]\npreset = \"rectangular\"\ntau = 0.5\n\n"
        "[run]\nreplicates = 40\nhorizon = 10\ngrid = \"0.5,1.0,inf\"\n")
    data = write_grouped(tmp_path / "d.csv", [[0.4, 0.9], [1.5]])
    monkeypatch.setenv("MINID_SEED", "7")
    assert run(["posterior-predictive", "--spec", str(cfg), "--data", str(data), "--out", str(tmp_path / "h")]) == 0
    man = json.loads((tmp_path / "h" / "manifest.json").read_text())
    assert man["seed"] == 7 and man["settings"]["replicates"] == 40
    assert read_grouped(data, 2) == [[0.4, 0.9], [1.5]]


def test_config_infinity_literal(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"grid": ["inf", 1.0]}')
    assert load_config(p)["grid"][0] == float("inf")
