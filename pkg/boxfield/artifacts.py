"""
Run artifacts: atomic writes, CSV/JSON codecs, manifests and the run ledger.

Result files (CSV, JSON, PNG, SVG) depend only on the resolved configuration.
Manifests carry wall time and host versions and are not byte-stable.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import platform
import tempfile
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from threading import Lock

import numpy as np

from boxfield import __version__
from boxfield.errors import ConfigError

logger = logging.getLogger(__name__)

_LIBRARIES = ("numpy", "scipy", "pydantic", "PyYAML", "Pillow", "python-dotenv")


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """Write to a temp file in the target directory, then rename over `path`."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp_fd, tmp_path = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
    try:
        with os.fdopen(tmp_fd, "wb") as f:
            f.write(data)
        os.replace(tmp_path, target)
    except Exception:
        try:
            os.unlink(tmp_path)
        except Exception:
            pass
        raise
    return target


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(value: float) -> str:
    return "%.17g" % value


def write_samples_csv(path: str | Path, samples) -> Path:
    lines = ["value"] + [_fmt(v) for v in np.asarray(samples, dtype=float).ravel()]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_samples_csv(path: str | Path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"samples file not found: {p}")
    with open(p, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["value"]:
            raise ConfigError(f"{p}: expected a single 'value' column (got {header})")
        try:
            values = [float(row[0]) for row in reader if row]
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{p}: malformed sample row: {exc}") from exc
    return np.asarray(values)


def write_cf_csv(path: str | Path, t_grid, values) -> Path:
    buf = io.StringIO()
    buf.write("t,re,im\n")
    for t, z in zip(np.asarray(t_grid, dtype=float), np.asarray(values, dtype=complex)):
        buf.write(f"{_fmt(t)},{_fmt(z.real)},{_fmt(z.imag)}\n")
    return atomic_write_text(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(data) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str | Path, data) -> Path:
    return atomic_write_text(path, dumps_json(data))


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def library_versions() -> dict:
    out = {"boxfield": __version__, "python": platform.python_version()}
    for name in _LIBRARIES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    return out


def manifest_path(artifact: str | Path) -> Path:
    p = Path(artifact)
    return p.with_name(p.name + ".manifest.json")


def build_manifest(
    *,
    command: str,
    config: dict,
    seed: int | None,
    artifacts: list[str | Path],
    wall_seconds: float,
    status: str = "ok",
    exit_code: int = 0,
    truncation: dict | None = None,
    best_estimate=None,
    error: str | None = None,
    extra: dict | None = None,
) -> dict:
    files = []
    for a in artifacts:
        p = Path(a)
        files.append({"path": str(p), "sha256": sha256_file(p) if p.exists() else None})
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "versions": library_versions(),
        "created": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": round(wall_seconds, 3),
        "artifacts": files,
        "status": status,
        "exit_code": exit_code,
    }
    if truncation is not None:
        manifest["truncation"] = truncation
    if best_estimate is not None:
        manifest["best_estimate"] = best_estimate
    if error is not None:
        manifest["error"] = error
    if extra:
        manifest.update(extra)
    return manifest


def read_manifest(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"manifest not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse manifest {p}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("config"), dict):
        raise ConfigError(f"{p} has no config echo")
    return data


class RunLedger:
    """
    Append-only JSONL record of runs.

    Each record:
        ts          ISO-8601 timestamp
        command     CLI command name
        status      "ok" | "fail" | "error"
        exit_code   process exit code
        manifest    path of the run manifest (may be empty)
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = Lock()
        self._file = None

    @property
    def path(self) -> Path:
        return self._path

    def _ensure_open(self):
        if self._file is None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self._path, "a", buffering=1)

    def record(self, *, command: str, status: str, exit_code: int, manifest: str | Path | None = None,
               extra: dict | None = None) -> None:
        """Append one run record. Never raises."""
        try:
            entry = {
                "ts": datetime.now(timezone.utc).isoformat(),
                "command": command,
                "status": status,
                "exit_code": exit_code,
                "manifest": str(manifest) if manifest else "",
            }
            if extra:
                entry.update(_jsonable(extra))
            with self._lock:
                self._ensure_open()
                self._file.write(json.dumps(entry, ensure_ascii=False) + "\n")
        except Exception as exc:
            logger.warning("RunLedger write failed: %s", exc)

    def close(self) -> None:
        if self._file:
            try:
                self._file.close()
            except Exception:
                pass
            self._file = None


_ledgers: dict[str, RunLedger] = {}


def get_ledger(path: str | Path) -> RunLedger:
    """Return (or create) the ledger for `path`, one instance per file."""
    key = str(Path(path).expanduser().resolve())
    if key not in _ledgers:
        _ledgers[key] = RunLedger(key)
    return _ledgers[key]
