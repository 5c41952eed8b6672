"""
Config loader for boxfield.

Settings are layered, lowest precedence first:

    schema defaults  →  config.yaml (or $BOXFIELD_CONFIG)  →  --config run file  →  flags

String values may reference the environment as ${VAR} or ${VAR:-default};
`.env` files are loaded first. The merged mapping is validated against the
RunConfig schema. Unknown keys are rejected (a typo in a tolerance block
would otherwise silently run with the default).
"""

from __future__ import annotations

import json
import logging
import os
import re
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from boxfield.errors import ConfigError

logger = logging.getLogger(__name__)

load_dotenv()

_CONFIG_PATH = Path(__file__).parent.parent / "config.yaml"
DEFAULT_SEED = 20240917

_config: dict | None = None

# Flag spelled out in "missing field" messages.
FLAG_NAMES = {
    "model.regime": "--regime",
    "model.gamma1": "--gamma1",
    "model.gamma2": "--gamma2",
    "model.rho": "--rho",
    "model.lambda_rho": "--lambda",
    "model.eta": "--eta",
    "model.measure": "--measure",
    "compare.samples": "--samples",
    "run.out": "--out",
    "suite.name": "--name",
}


# ── Schema ───────────────────────────────────────────────────────────────────

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LoggingCfg(_Section):
    level: str = "INFO"
    file: Optional[str] = None


class RunCfg(_Section):
    seed: int = DEFAULT_SEED
    threads: int = Field(default=1, ge=1)
    out: Optional[str] = None
    ledger: Optional[str] = None

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, value: int) -> int:
        if not 0 <= value < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return value


class ModelCfg(_Section):
    regime: Optional[str] = None
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None
    rho: Optional[float] = Field(default=None, gt=0)
    lambda_rho: Optional[float] = Field(default=None, gt=0)
    delta: float = Field(default=0.3, gt=0)
    eta: Optional[float] = None
    a_scale: float = Field(default=1.0, gt=0)
    umin1: Optional[float] = Field(default=None, gt=0)
    umin2: Optional[float] = Field(default=None, gt=0)
    measure: str = "laplace:C=1,c=1"


class SimulationCfg(_Section):
    replicates: int = Field(default=1000, ge=1)
    rotate: bool = False
    max_boxes: int = Field(default=2_000_000, ge=1)
    chunk: int = Field(default=256, ge=1)


class ToleranceCfg(_Section):
    quad_constants: float = Field(default=1e-7, gt=0)
    quad_cf: float = Field(default=1e-5, gt=0)
    trunc_fraction: float = Field(default=1e-3, gt=0)
    cf_target: float = Field(default=1e-2, gt=0)

    @property
    def eps_trunc(self) -> float:
        return self.trunc_fraction * self.cf_target


class GridCfg(_Section):
    t_grid: Optional[str] = None
    points: int = Field(default=41, ge=2)
    span: float = Field(default=5.0, gt=0)


class CompareCfg(_Section):
    samples: Optional[str] = None
    reference: Literal["limit", "prelimit"] = "limit"
    band_factor: float = Field(default=2.0, gt=0)
    report: Optional[str] = None


class RenderCfg(_Section):
    pixels: str = "1024x1024"
    viewport: list[float] = Field(default_factory=lambda: [-1.0, -1.0, 1.0, 1.0])
    fill: Literal["binary", "alpha"] = "binary"
    format: Literal["png", "svg"] = "png"

    @field_validator("viewport")
    @classmethod
    def _viewport_shape(cls, value: list[float]) -> list[float]:
        if len(value) != 4 or value[0] >= value[2] or value[1] >= value[3]:
            raise ValueError("viewport must be [x0, y0, x1, y1] with x0 < x1 and y0 < y1")
        return value

    @field_validator("pixels")
    @classmethod
    def _pixels_shape(cls, value: str) -> str:
        parse_pixels(value)
        return value


class LemmaCfg(_Section):
    gamma1: float = 1.3
    gamma2: float = 1.6
    rho_ladder: list[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])


class SuiteCfg(_Section):
    name: Optional[str] = None
    replicates: int = Field(default=2000, ge=1)
    full: bool = False


class RunConfig(_Section):
    command: Optional[str] = None
    logging: LoggingCfg = Field(default_factory=LoggingCfg)
    run: RunCfg = Field(default_factory=RunCfg)
    model: ModelCfg = Field(default_factory=ModelCfg)
    simulation: SimulationCfg = Field(default_factory=SimulationCfg)
    tolerance: ToleranceCfg = Field(default_factory=ToleranceCfg)
    grid: GridCfg = Field(default_factory=GridCfg)
    compare: CompareCfg = Field(default_factory=CompareCfg)
    render: RenderCfg = Field(default_factory=RenderCfg)
    lemma: LemmaCfg = Field(default_factory=LemmaCfg)
    suite: SuiteCfg = Field(default_factory=SuiteCfg)

    def echo(self) -> dict:
        """Fully resolved configuration, JSON-ready, for manifests."""
        return self.model_dump(mode="json")

    def with_overrides(self, overrides: dict) -> "RunConfig":
        return validate_config(_deep_merge(self.echo(), overrides))


def parse_pixels(text: str) -> tuple[int, int]:
    match = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not match:
        raise ValueError(f"pixels must look like WIDTHxHEIGHT (got {text!r})")
    width, height = int(match.group(1)), int(match.group(2))
    if width <= 0 or height <= 0:
        raise ValueError("pixel dimensions must be positive")
    return width, height


# ── Environment resolution ───────────────────────────────────────────────────

def _resolve_env_vars(value: str) -> str:
    """Replace ${ENV_VAR} and ${ENV_VAR:-default} patterns with environment variable values."""
    def replacer(match):
        var_name = match.group(1)
        default = match.group(2)
        val = os.environ.get(var_name)
        if val is not None:
            return val
        return default if default is not None else ""
    return re.sub(r"\$\{(\w+)(?::-(.*?))?\}", replacer, value)


def _walk_and_resolve(obj):
    """Recursively resolve env vars in all string values."""
    if isinstance(obj, dict):
        return {k: _walk_and_resolve(v) for k, v in obj.items()}
    elif isinstance(obj, list):
        return [_walk_and_resolve(v) for v in obj]
    elif isinstance(obj, str):
        return _resolve_env_vars(obj)
    return obj


def _deep_merge(base: dict, extra: dict) -> dict:
    """Merge `extra` onto `base`; None values in `extra` leave `base` untouched."""
    merged = dict(base)
    for key, value in extra.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


# ── Loading ──────────────────────────────────────────────────────────────────

def _read_mapping(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    try:
        with open(path) as f:
            if path.suffix.lower() == ".json":
                data = json.load(f)
            else:
                data = yaml.safe_load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _walk_and_resolve(data)


def load_config(path: Path | None = None) -> dict:
    """Load and cache the repository defaults file (empty if absent)."""
    global _config
    if _config is not None and path is None:
        return _config

    config_path = path or Path(os.environ.get("BOXFIELD_CONFIG", _CONFIG_PATH))
    if not config_path.exists():
        logger.debug("no defaults file at %s, using schema defaults", config_path)
        loaded: dict = {}
    else:
        loaded = _read_mapping(config_path)
    if path is None:
        _config = loaded
    return loaded


def reset_config_cache() -> None:
    global _config
    _config = None


def validate_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        problems = []
        for err in e.errors():
            loc = " → ".join(str(x) for x in err["loc"])
            problems.append(f"{loc}: {err['msg']}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems)) from e


def resolve_run_config(
    file: str | Path | None = None,
    overrides: dict | None = None,
    defaults_path: Path | None = None,
) -> RunConfig:
    """Defaults file, then the run file, then flag overrides; validated."""
    merged: dict[str, Any] = dict(load_config(defaults_path))
    if file is not None:
        merged = _deep_merge(merged, _read_mapping(Path(file)))
    if overrides:
        merged = _deep_merge(merged, overrides)
    cfg = validate_config(merged)
    logger.debug("resolved config: %s", cfg.echo())
    return cfg


def require(cfg: RunConfig, dotted: str) -> Any:
    """Return a config value or raise ConfigError naming the field and its flag."""
    node: Any = cfg
    for part in dotted.split("."):
        node = getattr(node, part, None)
        if node is None:
            break
    if node is None:
        flag = FLAG_NAMES.get(dotted)
        hint = f" (set {flag} or {dotted} in the config file)" if flag else ""
        raise ConfigError(f"missing required setting {dotted}{hint}")
    return node
