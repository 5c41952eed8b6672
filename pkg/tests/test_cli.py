"""
Tests for the boxfield command line: argument resolution, outputs, manifests and exit codes.
Run with: pytest tests/test_cli.py
"""

import hashlib
import json

import numpy as np
import pytest

from boxfield.artifacts import get_ledger
from boxfield.cli import build_parser, main

HIGH = ["--regime", "high", "--gamma1", "1.3", "--gamma2", "1.6", "--rho", "0.3",
        "--delta", "0.3", "--measure", "gauss:A=1,w=0.5"]
FINITE = ["--regime", "finite-variance", "--gamma1", "3", "--gamma2", "3", "--rho", "0.3",
          "--lambda", "100"]


def _ledger(run_dir):
    path = run_dir / "runs" / "ledger.jsonl"
    return [json.loads(line) for line in path.read_text().splitlines()]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class TestParser:
    def test_aliases_resolve_to_canonical_name(self):
        args = build_parser().parse_args(["sim", "--rho", "0.1"])
        assert args.command_name == "simulate"
        assert args.rho == 0.1

    def test_lambda_flag(self):
        args = build_parser().parse_args(["plan", "--lambda", "50"])
        assert args.lambda_rho == 50.0

    def test_no_command_prints_help(self, run_dir, capsys):
        assert main([]) == 0
        assert "boxfield" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# JSON commands
# ---------------------------------------------------------------------------

def test_plan_prints_json(run_dir, capsys):
    assert main(["plan", *HIGH]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["plan"]["regime"] == "high"
    assert payload["truncation"]["expected_count"] > 0


def test_missing_field_names_the_flag(run_dir, capsys):
    assert main(["plan", "--regime", "high", "--gamma1", "1.3", "--rho", "0.3"]) == 2
    assert "--gamma2" in capsys.readouterr().err


def test_regime_violation_exits_3(run_dir):
    assert main(["plan", "--regime", "high", "--gamma1", "1.3", "--gamma2", "2.5", "--rho", "0.3"]) == 3


def test_limit_var_high(run_dir, capsys):
    assert main(["limit-var", *HIGH]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["regime"] == "high"
    assert payload["variance"] > 0


def test_limit_var_rejects_non_gaussian(run_dir):
    assert main(["var", "--regime", "intermediate", "--gamma1", "1.3", "--gamma2", "1.6", "--rho", "0.3"]) == 2


def test_stable_params(run_dir, capsys):
    assert main(["stable-params", "--gamma1", "1.5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["sigma"] == pytest.approx(1.46752, abs=1e-4)
    assert payload["beta"] == 1.0
    assert "constants" not in payload


def test_stable_params_writes_file(run_dir):
    assert main(["stable", "--gamma1", "1.5", "--gamma2", "2.5", "--out", "stable.json"]) == 0
    payload = json.loads((run_dir / "stable.json").read_text())
    assert payload["alpha"] == 1.5
    assert "constants" in payload
    assert (run_dir / "stable.json.manifest.json").exists()


# ---------------------------------------------------------------------------
# Simulation and reproducibility
# ---------------------------------------------------------------------------

class TestSimulate:
    def test_writes_samples_manifest_and_ledger(self, run_dir):
        assert main(["simulate", *HIGH, "-n", "8", "--seed", "11", "--out", "s.csv"]) == 0
        lines = (run_dir / "s.csv").read_text().splitlines()
        assert lines[0] == "value"
        assert len(lines) == 9

        manifest = json.loads((run_dir / "s.csv.manifest.json").read_text())
        assert manifest["status"] == "ok"
        assert manifest["seed"] == 11
        assert manifest["config"]["simulation"]["replicates"] == 8
        digest = hashlib.sha256((run_dir / "s.csv").read_bytes()).hexdigest()
        assert manifest["artifacts"][0]["sha256"] == digest
        assert manifest["truncation"]["expected_count"] > 0

        records = _ledger(run_dir)
        assert records[-1]["command"] == "simulate"
        assert records[-1]["exit_code"] == 0

    def test_ledger_handle_is_released_after_each_run(self, run_dir):
        path = run_dir / "runs" / "ledger.jsonl"
        for seed in ("1", "2"):
            assert main(["simulate", *HIGH, "-n", "4", "--seed", seed, "--out", f"s{seed}.csv"]) == 0
            assert get_ledger(path)._file is None
        assert [r["exit_code"] for r in _ledger(run_dir)[-2:]] == [0, 0]

    def test_thread_count_does_not_change_output(self, run_dir):
        base = [*HIGH, "-n", "12", "--seed", "5", "--chunk", "3"]
        assert main(["simulate", *base, "--threads", "1", "--out", "a.csv"]) == 0
        assert main(["simulate", *base, "--threads", "2", "--out", "b.csv"]) == 0
        assert (run_dir / "a.csv").read_bytes() == (run_dir / "b.csv").read_bytes()

    def test_rerun_reproduces_bytes(self, run_dir):
        assert main(["simulate", *HIGH, "-n", "6", "--seed", "3", "--out", "s.csv"]) == 0
        first = (run_dir / "s.csv").read_bytes()
        (run_dir / "s.csv").unlink()
        assert main(["rerun", "--manifest", "s.csv.manifest.json"]) == 0
        assert (run_dir / "s.csv").read_bytes() == first

    def test_out_is_required(self, run_dir, capsys):
        assert main(["simulate", *HIGH, "-n", "4"]) == 2
        assert "--out" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Compare
# ---------------------------------------------------------------------------

class TestCompare:
    def test_constant_samples_fail(self, run_dir):
        (run_dir / "const.csv").write_text("value\n" + "3.0\n" * 50)
        code = main(["compare", *FINITE, "--samples", "const.csv", "--report", "r.json"])
        assert code == 1
        report = json.loads((run_dir / "r.json").read_text())
        assert report["verdict"] == "FAIL"
        manifest = json.loads((run_dir / "r.json.manifest.json").read_text())
        assert manifest["status"] == "fail"
        assert manifest["exit_code"] == 1

    def test_normal_samples_pass(self, run_dir):
        values = np.random.default_rng(0).normal(size=2000)
        (run_dir / "normal.csv").write_text("value\n" + "".join("%.17g\n" % v for v in values))
        code = main(["compare", *FINITE, "--samples", "normal.csv", "--band-factor", "4",
                     "--report", "r.json"])
        assert code == 0
        assert json.loads((run_dir / "r.json").read_text())["verdict"] == "PASS"

    def test_missing_samples_file(self, run_dir):
        assert main(["compare", *FINITE, "--samples", "none.csv"]) == 2


# ---------------------------------------------------------------------------
# CF grids
# ---------------------------------------------------------------------------

def test_limit_cf_csv(run_dir):
    assert main(["limit-cf", *HIGH, "--t-grid=-1:1:5", "--out", "cf.csv"]) == 0
    lines = (run_dir / "cf.csv").read_text().splitlines()
    assert lines[0] == "t,re,im"
    assert len(lines) == 6
    t, re, im = (float(v) for v in lines[3].split(","))
    assert t == 0.0 and re == 1.0 and im == 0.0


def test_limit_cf_stdout(run_dir, capsys):
    assert main(["lcf", *HIGH, "--t-grid=0:1:3"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "t,re,im"


def test_prelimit_cf_refuses_rotation(run_dir):
    assert main(["prelimit-cf", *HIGH, "--rotate", "--t-grid=0:1:3"]) == 2


# ---------------------------------------------------------------------------
# Render, lemma, suites
# ---------------------------------------------------------------------------

def test_render_png(run_dir):
    assert main(["render", *HIGH, "--pixels", "64x64", "--out", "field.png"]) == 0
    assert (run_dir / "field.png").read_bytes().startswith(b"\x89PNG")
    manifest = json.loads((run_dir / "field.png.manifest.json").read_text())
    assert manifest["boxes"] >= 0
    assert 0.0 <= manifest["black_fraction"] <= 1.0


def test_render_svg_from_suffix(run_dir):
    assert main(["draw", *HIGH, "--pixels", "64x64", "--out", "field.svg"]) == 0
    assert (run_dir / "field.svg").read_text().startswith("<svg")


def test_lemma_check(run_dir, capsys):
    assert main(["lemma-check"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "PASS"


def test_suite_constants(run_dir, capsys):
    assert main(["suite", "--name", "constants"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "PASS"


def test_unknown_suite(run_dir):
    assert main(["suite", "--name", "nope"]) == 2
    assert _ledger(run_dir)[-1]["exit_code"] == 2


def test_bad_config_file(run_dir):
    (run_dir / "run.yaml").write_text("simulation:\n  replicates: 0\n")
    assert main(["plan", *HIGH, "--config", "run.yaml"]) == 2
