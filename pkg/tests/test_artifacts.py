"""
Tests for atomic writes, sample/CF codecs, manifests and the run ledger.
Run with: pytest tests/test_artifacts.py
"""

import hashlib
import json
import os

import numpy as np
import pytest

from boxfield.artifacts import (
    RunLedger,
    atomic_write_text,
    build_manifest,
    dumps_json,
    get_ledger,
    manifest_path,
    read_manifest,
    read_samples_csv,
    write_cf_csv,
    write_json,
    write_samples_csv,
)
from boxfield.errors import ConfigError


# ---------------------------------------------------------------------------
# Atomic writes
# ---------------------------------------------------------------------------

def test_atomic_write_creates_parents(tmp_path):
    target = tmp_path / "a" / "b" / "out.txt"
    atomic_write_text(target, "hello\n")
    assert target.read_text() == "hello\n"
    assert list(target.parent.glob("*.tmp")) == []


def test_atomic_write_cleans_up_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"

    def broken_replace(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", broken_replace)
    with pytest.raises(OSError, match="disk full"):
        atomic_write_text(target, "x")
    assert not target.exists()
    assert list(tmp_path.glob("*.tmp")) == []


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def test_samples_csv_keeps_full_precision(tmp_path):
    values = np.array([0.1, -1.0 / 3.0, 1e-300, 12345.678901234567])
    path = write_samples_csv(tmp_path / "s.csv", values)
    assert path.read_text().splitlines()[0] == "value"
    np.testing.assert_array_equal(read_samples_csv(path), values)


def test_samples_csv_header_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x\n1.0\n")
    with pytest.raises(ConfigError, match="value"):
        read_samples_csv(path)


def test_samples_csv_malformed_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("value\n1.0\nabc\n")
    with pytest.raises(ConfigError, match="malformed"):
        read_samples_csv(path)


def test_samples_csv_missing(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        read_samples_csv(tmp_path / "none.csv")


def test_cf_csv(tmp_path):
    path = write_cf_csv(tmp_path / "cf.csv", [0.0, 1.0], [1.0 + 0j, 0.5 - 0.25j])
    lines = path.read_text().splitlines()
    assert lines[0] == "t,re,im"
    assert lines[2] == "1,0.5,-0.25"


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def test_dumps_json_is_canonical():
    text = dumps_json({"b": 1, "a": np.float64(0.5), "z": 1 + 2j, "arr": np.arange(2), "inf": float("inf")})
    assert text.endswith("}\n")
    data = json.loads(text)
    assert list(data) == ["a", "arr", "b", "inf", "z"]
    assert data["z"] == [1.0, 2.0]
    assert data["arr"] == [0, 1]
    assert data["inf"] == "inf"


def test_write_json_is_byte_stable(tmp_path):
    a = write_json(tmp_path / "a.json", {"x": [1, 2], "y": {"k": 0.1}})
    b = write_json(tmp_path / "b.json", {"y": {"k": 0.1}, "x": [1, 2]})
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

class TestManifest:
    def test_path_naming(self, tmp_path):
        assert manifest_path(tmp_path / "x.csv").name == "x.csv.manifest.json"

    def test_digests(self, tmp_path):
        artifact = tmp_path / "x.csv"
        artifact.write_text("value\n1\n")
        manifest = build_manifest(command="simulate", config={"run": {"seed": 1}}, seed=1,
                                  artifacts=[artifact], wall_seconds=0.5)
        assert manifest["artifacts"][0]["sha256"] == hashlib.sha256(b"value\n1\n").hexdigest()
        assert manifest["status"] == "ok"
        assert manifest["versions"]["boxfield"]

    def test_missing_artifact_has_no_digest(self, tmp_path):
        manifest = build_manifest(command="compare", config={}, seed=None,
                                  artifacts=[tmp_path / "gone.json"], wall_seconds=0.0,
                                  status="error", exit_code=4, best_estimate=[0.5, 0.0], error="boom")
        assert manifest["artifacts"][0]["sha256"] is None
        assert manifest["best_estimate"] == [0.5, 0.0]
        assert manifest["error"] == "boom"

    def test_read_requires_config(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"command": "simulate"}))
        with pytest.raises(ConfigError, match="config"):
            read_manifest(path)

    def test_read_roundtrip(self, tmp_path):
        manifest = build_manifest(command="plan", config={"model": {"rho": 0.1}}, seed=3,
                                  artifacts=[], wall_seconds=0.0)
        path = write_json(tmp_path / "m.json", manifest)
        assert read_manifest(path)["config"] == {"model": {"rho": 0.1}}


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------

class TestLedger:
    def test_records_are_jsonl(self, tmp_path):
        ledger = RunLedger(tmp_path / "runs" / "ledger.jsonl")
        ledger.record(command="simulate", status="ok", exit_code=0, manifest="x.manifest.json")
        ledger.record(command="compare", status="fail", exit_code=1, extra={"gap": np.float64(0.2)})
        ledger.close()
        lines = (tmp_path / "runs" / "ledger.jsonl").read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert [r["command"] for r in records] == ["simulate", "compare"]
        assert records[1]["gap"] == 0.2
        assert records[0]["manifest"] == "x.manifest.json"

    def test_write_failure_is_swallowed(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        ledger = RunLedger(blocker / "ledger.jsonl")
        ledger.record(command="plan", status="ok", exit_code=0)

    def test_one_instance_per_file(self, tmp_path):
        assert get_ledger(tmp_path / "l.jsonl") is get_ledger(tmp_path / "l.jsonl")
        assert get_ledger(tmp_path / "l.jsonl") is not get_ledger(tmp_path / "m.jsonl")
