#!/usr/bin/env python3
"""
boxfield CLI: simulate, evaluate and verify the random boxes model.

    COMMAND         ALIASES         WHAT IT DOES
    -------         -------         ----------------------------------------
    simulate        sim             Monte-Carlo draws of the normalized field → CSV
    prelimit-cf     pcf             Exact pre-limit CF on a t-grid → CSV
    limit-cf        lcf             Limit CF on a t-grid → CSV
    limit-var       var             Variance of a Gaussian limit → JSON
    stable-params   stable          Points-regime stable parameters → JSON
    compare         cmp             Empirical CF vs a reference → report JSON
    render          draw            Rasterize one field → PNG / SVG
    lemma-check     lemma           Edge-integral asymptotics → JSON
    suite           check           Run a named acceptance suite → JSON
    plan            -               Print the resolved scaling plan → JSON
    rerun           replay          Re-execute a manifest's configuration

Settings come from config.yaml, then --config, then flags. Every run that
writes a file also writes <file>.manifest.json and appends to the run ledger.

Exit codes: 0 ok, 1 comparison/suite FAIL, 2 configuration, domain or budget
error, 3 regime hypothesis or membership violation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from boxfield import __version__
from boxfield.artifacts import (
    atomic_write_bytes,
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
from boxfield.config import RunConfig, parse_pixels, require, resolve_run_config, validate_config
from boxfield.errors import BoxfieldError, ConfigError, QuadratureError, UnsupportedOperationError
from boxfield.limits import LawKind, limit_law
from boxfield.measures import MeasureDescriptor, measure_from_dict, parse_measure, stable_params
from boxfield.process import Regime, ScalingPlan, plan_regime, replicate_rng, simulate_normalized, truncation_budget
from boxfield.quadrature import prelimit_cf
from boxfield.render import (
    RasterSpec,
    anisotropy_ratio,
    black_fraction,
    rasterize,
    render_field,
    sample_render_field,
)
from boxfield.stats import cf_distance, default_t_grid, lemma_ratio_check, parse_t_grid
from boxfield.suites import run_suite
from boxfield.tails import edge_law, limit_constants

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1


def _setup_logging(cfg: RunConfig, verbose: bool = False, quiet: bool = False) -> None:
    level = getattr(logging, cfg.logging.level.upper(), logging.INFO)
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING

    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if cfg.logging.file:
        Path(cfg.logging.file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(cfg.logging.file))

    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


# ---------------------------------------------------------------------------
# Shared resolution
# ---------------------------------------------------------------------------

@dataclass
class Outcome:
    """What a command produced. `primary` anchors the manifest."""

    primary: Path | None = None
    artifacts: list[Path] = field(default_factory=list)
    status: str = "ok"
    stdout: str | None = None
    truncation: dict | None = None
    extra: dict = field(default_factory=dict)


def _measure(cfg: RunConfig) -> MeasureDescriptor:
    text = cfg.model.measure
    if text.startswith("@"):
        path = Path(text[1:])
        if not path.exists():
            raise ConfigError(f"measure file not found: {path}")
        try:
            return measure_from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse measure file {path}: {exc}") from exc
    return parse_measure(text)


def _plan(cfg: RunConfig) -> ScalingPlan:
    m = cfg.model
    regime = Regime.parse(require(cfg, "model.regime"))
    gamma1 = require(cfg, "model.gamma1")
    gamma2 = require(cfg, "model.gamma2")
    rho = require(cfg, "model.rho")
    if regime is Regime.GAUSSIAN_LINES:
        require(cfg, "model.eta")
    if regime is Regime.FINITE_VARIANCE:
        require(cfg, "model.lambda_rho")
    plan = plan_regime(regime, gamma1, gamma2, rho, delta=m.delta, eta=m.eta, a_scale=m.a_scale,
                       lambda_rho=m.lambda_rho, umin1=m.umin1, umin2=m.umin2)
    logger.info("plan %s ρ=%g: λ_ρ=%.6g n_ρ=%.6g", plan.regime.value, plan.rho, plan.lambda_rho, plan.n_rho)
    return plan


def _t_grid(cfg: RunConfig, samples=None) -> np.ndarray:
    if cfg.grid.t_grid:
        return parse_t_grid(cfg.grid.t_grid)
    if samples is not None:
        return default_t_grid(samples, cfg.grid.points, cfg.grid.span)
    return np.linspace(-cfg.grid.span, cfg.grid.span, cfg.grid.points)


def _cf_csv_text(t_grid, values) -> str:
    buf = io.StringIO()
    buf.write("t,re,im\n")
    for t, z in zip(t_grid, values):
        buf.write("%.17g,%.17g,%.17g\n" % (t, z.real, z.imag))
    return buf.getvalue()


def _emit_json(cfg: RunConfig, payload: dict, out: str | None = None) -> Outcome:
    out = out or cfg.run.out
    if out is None:
        return Outcome(stdout=dumps_json(payload))
    path = write_json(out, payload)
    logger.info("wrote %s", path)
    return Outcome(primary=path, artifacts=[path])


def _emit_cf(cfg: RunConfig, t_grid, values) -> Outcome:
    if cfg.run.out is None:
        return Outcome(stdout=_cf_csv_text(t_grid, values))
    path = write_cf_csv(cfg.run.out, t_grid, values)
    logger.info("wrote %d CF values to %s", len(t_grid), path)
    return Outcome(primary=path, artifacts=[path])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> Outcome:
    """Monte-Carlo draws of the centred, normalized functional."""
    out = require(cfg, "run.out")
    plan, mu = _plan(cfg), _measure(cfg)
    sim = cfg.simulation
    report = truncation_budget(plan, mu, cfg.tolerance.eps_trunc, rotate=sim.rotate, max_boxes=sim.max_boxes)
    t0 = time.monotonic()
    values = simulate_normalized(plan, mu, sim.replicates, cfg.run.seed, threads=cfg.run.threads,
                                 rotate=sim.rotate, chunk=sim.chunk, report=report)
    elapsed = time.monotonic() - t0
    path = write_samples_csv(out, values)
    logger.info("wrote %d samples to %s (mean %.4g, sd %.4g, %.1fs)",
                values.size, path, float(values.mean()), float(values.std()), elapsed)
    return Outcome(primary=path, artifacts=[path], truncation=report.describe(),
                   extra={"plan": plan.describe(), "simulation_seconds": round(elapsed, 3)})


def cmd_prelimit_cf(cfg: RunConfig) -> Outcome:
    """Exact characteristic function of the normalized functional at finite ρ."""
    if cfg.simulation.rotate:
        raise UnsupportedOperationError("the pre-limit CF is available for axis-aligned boxes only")
    plan, mu = _plan(cfg), _measure(cfg)
    grid = _t_grid(cfg)
    values = np.array([prelimit_cf(plan, mu, float(t), cfg.tolerance.quad_cf) for t in grid])
    outcome = _emit_cf(cfg, grid, values)
    outcome.extra["plan"] = plan.describe()
    return outcome


def cmd_limit_cf(cfg: RunConfig) -> Outcome:
    """Characteristic function of the regime's limit law."""
    plan, mu = _plan(cfg), _measure(cfg)
    law = limit_law(plan, mu, cfg.tolerance.quad_constants, cfg.tolerance.quad_cf)
    grid = _t_grid(cfg)
    outcome = _emit_cf(cfg, grid, np.atleast_1d(law.cf(grid)))
    outcome.extra.update(plan=plan.describe(), limit=law.describe())
    return outcome


def cmd_limit_var(cfg: RunConfig) -> Outcome:
    """Variance of a Gaussian limit (high, gaussian_lines, finite_variance)."""
    plan, mu = _plan(cfg), _measure(cfg)
    law = limit_law(plan, mu, cfg.tolerance.quad_constants, cfg.tolerance.quad_cf)
    if law.kind is not LawKind.GAUSSIAN:
        raise UnsupportedOperationError(
            f"{plan.regime.value} has a non-Gaussian limit; limit-var covers high, gaussian_lines "
            "and finite_variance"
        )
    return _emit_json(cfg, {"regime": plan.regime.value, "variance": law.variance, "plan": plan.describe()})


def cmd_stable_params(cfg: RunConfig) -> Outcome:
    """σ_μ and β_μ of the points-regime stable limit."""
    gamma1 = require(cfg, "model.gamma1")
    mu = _measure(cfg)
    params = stable_params(mu, gamma1)
    payload = {"alpha": gamma1, "sigma": params.sigma, "beta": params.beta}
    if cfg.model.gamma2 is not None:
        law1 = edge_law(gamma1, cfg.model.umin1)
        law2 = edge_law(cfg.model.gamma2, cfg.model.umin2)
        payload["constants"] = limit_constants(gamma1, cfg.model.gamma2, law2, law1).describe()
    return _emit_json(cfg, payload)


def cmd_compare(cfg: RunConfig) -> Outcome:
    """Compare simulated samples with the limit or the pre-limit CF."""
    samples = read_samples_csv(require(cfg, "compare.samples"))
    plan, mu = _plan(cfg), _measure(cfg)
    grid = _t_grid(cfg, samples)
    trunc = truncation_budget(plan, mu, cfg.tolerance.eps_trunc, rotate=cfg.simulation.rotate,
                              max_boxes=cfg.simulation.max_boxes)
    if cfg.compare.reference == "limit":
        reference = limit_law(plan, mu, cfg.tolerance.quad_constants, cfg.tolerance.quad_cf)
        described = reference.describe()
    else:
        if cfg.simulation.rotate:
            raise UnsupportedOperationError("the pre-limit CF is available for axis-aligned boxes only")
        reference = np.array([prelimit_cf(plan, mu, float(t), cfg.tolerance.quad_cf) for t in grid])
        described = {"kind": "prelimit"}
    result = cf_distance(samples, reference, grid, band_factor=cfg.compare.band_factor,
                         quad_tol=cfg.tolerance.quad_cf, trunc_budget=trunc.total)
    payload = {**result.describe(), "reference": described, "plan": plan.describe(),
               "seed": cfg.run.seed, "samples_file": cfg.compare.samples}
    outcome = _emit_json(cfg, payload, cfg.compare.report)
    outcome.status = "ok" if result.passed else "fail"
    outcome.truncation = trunc.describe()
    logger.info("compare: %s (max gap %.4g, threshold %.4g)", result.verdict, result.max_abs_gap, result.threshold)
    return outcome


def cmd_render(cfg: RunConfig) -> Outcome:
    """Rasterize one seeded field of the plan."""
    out = Path(require(cfg, "run.out"))
    plan = _plan(cfg)
    r = cfg.render
    fmt = "svg" if out.suffix.lower() == ".svg" else r.format
    spec = RasterSpec(viewport=tuple(r.viewport), pixels=parse_pixels(r.pixels), fill=r.fill, format=fmt)
    spec.check_budget()
    box_field = sample_render_field(plan, replicate_rng(cfg.run.seed, 0), spec.viewport,
                                    rotate=cfg.simulation.rotate, max_boxes=cfg.simulation.max_boxes)
    path = atomic_write_bytes(out, render_field(box_field, spec))
    extra = {"plan": plan.describe(), "boxes": box_field.count}
    if fmt == "png":
        image = rasterize(box_field, spec)
        extra.update(anisotropy=anisotropy_ratio(image), black_fraction=black_fraction(image))
    logger.info("rendered %d boxes to %s", box_field.count, path)
    return Outcome(primary=path, artifacts=[path], truncation=box_field.report.describe(), extra=extra)


def cmd_lemma_check(cfg: RunConfig) -> Outcome:
    """Ratios ∫g dF_ρ / (ρ^{γ₁+γ₂}∫g·u^{−γ−1}) along the ρ-ladder for the min-power test function."""
    gamma1 = cfg.model.gamma1 if cfg.model.gamma1 is not None else cfg.lemma.gamma1
    gamma2 = cfg.model.gamma2 if cfg.model.gamma2 is not None else cfg.lemma.gamma2
    report = lemma_ratio_check(gamma1=gamma1, gamma2=gamma2, rhos=cfg.lemma.rho_ladder,
                               umin1=cfg.model.umin1, umin2=cfg.model.umin2,
                               tol=min(cfg.tolerance.quad_constants, 1e-9))
    payload = {"gamma1": gamma1, "gamma2": gamma2, **report.describe(),
               "verdict": "PASS" if report.monotone else "FAIL"}
    outcome = _emit_json(cfg, payload)
    outcome.status = "ok" if report.monotone else "fail"
    return outcome


def cmd_suite(cfg: RunConfig) -> Outcome:
    """Run one named acceptance suite."""
    report = run_suite(require(cfg, "suite.name"), cfg)
    outcome = _emit_json(cfg, report.describe())
    outcome.status = "ok" if report.passed else "fail"
    return outcome


def cmd_plan(cfg: RunConfig) -> Outcome:
    """Resolved plan and, for the configured measure, its truncation report."""
    plan, mu = _plan(cfg), _measure(cfg)
    report = truncation_budget(plan, mu, cfg.tolerance.eps_trunc, rotate=cfg.simulation.rotate,
                               max_boxes=cfg.simulation.max_boxes)
    return _emit_json(cfg, {"plan": plan.describe(), "truncation": report.describe()})


COMMANDS: dict[str, Callable[[RunConfig], Outcome]] = {
    "simulate": cmd_simulate,
    "prelimit-cf": cmd_prelimit_cf,
    "limit-cf": cmd_limit_cf,
    "limit-var": cmd_limit_var,
    "stable-params": cmd_stable_params,
    "compare": cmd_compare,
    "render": cmd_render,
    "lemma-check": cmd_lemma_check,
    "suite": cmd_suite,
    "plan": cmd_plan,
}


# ---------------------------------------------------------------------------
# Run orchestration
# ---------------------------------------------------------------------------

def _anchor(cfg: RunConfig) -> Path | None:
    if cfg.command == "compare" and cfg.compare.report:
        return Path(cfg.compare.report)
    return Path(cfg.run.out) if cfg.run.out else None


def run(cfg: RunConfig) -> int:
    """Execute `cfg.command`; write its manifest and ledger record. Returns the exit code."""
    command = require(cfg, "command")
    func = COMMANDS.get(command)
    if func is None:
        raise ConfigError(f"unknown command {command!r}; expected one of {sorted(COMMANDS)}")

    t0 = time.monotonic()
    outcome: Outcome | None = None
    error: BoxfieldError | None = None
    try:
        outcome = func(cfg)
        exit_code = EXIT_OK if outcome.status == "ok" else EXIT_FAIL
        status = outcome.status
    except BoxfieldError as exc:
        error = exc
        exit_code = exc.exit_code
        status = "error"
        logger.error("%s failed: %s", command, exc)
    wall = time.monotonic() - t0

    if outcome is not None and outcome.stdout is not None:
        sys.stdout.write(outcome.stdout)

    anchor = outcome.primary if outcome is not None and outcome.primary else _anchor(cfg)
    written = None
    if anchor is not None:
        best = error.best_estimate if isinstance(error, QuadratureError) else None
        manifest = build_manifest(
            command=command,
            config=cfg.echo(),
            seed=cfg.run.seed,
            artifacts=outcome.artifacts if outcome is not None else [],
            wall_seconds=wall,
            status=status,
            exit_code=exit_code,
            truncation=outcome.truncation if outcome is not None else None,
            best_estimate=best,
            error=f"{type(error).__name__}: {error}" if error else None,
            extra=outcome.extra if outcome is not None else None,
        )
        try:
            written = write_json(manifest_path(anchor), manifest)
            logger.debug("manifest %s", written)
        except OSError as exc:
            logger.warning("could not write manifest for %s: %s", anchor, exc)

    if cfg.run.ledger:
        ledger = get_ledger(cfg.run.ledger)
        ledger.record(command=command, status=status, exit_code=exit_code, manifest=written)
        ledger.close()
    return exit_code


# ---------------------------------------------------------------------------
# Parser with aliases
# ---------------------------------------------------------------------------

def _add_command(subparsers, names, help_text, setup_fns=(), parents=()):
    """Register a command under its canonical name plus aliases.

    names[0] is the canonical name stored in the run config; names[1:] are
    aliases accepted on the command line.
    """
    p = subparsers.add_parser(names[0], help=help_text, aliases=names[1:], parents=list(parents))
    p.set_defaults(command_name=names[0])
    for fn in setup_fns:
        fn(p)
    return p


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=None, help="Run file (.json or YAML) layered over config.yaml")
    p.add_argument("--seed", type=int, default=None, help="64-bit seed (default: $BOXFIELD_SEED or config)")
    p.add_argument("--threads", type=int, default=None, help="Worker threads; results do not depend on it")
    p.add_argument("--out", "-o", default=None, help="Output file (JSON commands print to stdout without it)")
    p.add_argument("--ledger", default=None, help="Run ledger JSONL path")
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    p.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")
    return p


def _model_args(p):
    p.add_argument("--regime", default=None,
                   help="high | intermediate | gaussian-lines | poisson-lines | points | finite-variance")
    p.add_argument("--gamma1", type=float, default=None, help="Tail index of the edge u₁")
    p.add_argument("--gamma2", type=float, default=None, help="Tail index of the edge u₂")
    p.add_argument("--rho", type=float, default=None, help="Shrink factor ρ")
    p.add_argument("--lambda", dest="lambda_rho", type=float, default=None,
                   help="Intensity λ_ρ (finite-variance regime)")
    p.add_argument("--delta", type=float, default=None, help="Regime exponent δ (high, points)")
    p.add_argument("--eta", type=float, default=None, help="Exponent η (gaussian-lines)")
    p.add_argument("--a-scale", type=float, default=None, help="Scale factor a (general-a scalings)")
    p.add_argument("--umin1", type=float, default=None, help="Lower edge bound u₁ (default: unit tail)")
    p.add_argument("--umin2", type=float, default=None, help="Lower edge bound u₂ (default: unit tail)")
    p.add_argument("--measure", default=None, help="Measure spec, e.g. laplace:C=1,c=1, or @file.json")
    p.add_argument("--tol", type=float, default=None, help="Quadrature tolerance for constants")
    p.add_argument("--cf-tol", type=float, default=None, help="Quadrature tolerance for CF values")
    p.add_argument("--eps-trunc", type=float, default=None,
                   help="Truncation fraction (budget = fraction × CF target)")


def _simulation_args(p):
    p.add_argument("--replicates", "-n", type=int, default=None, help="Number of replicates")
    p.add_argument("--rotate", action="store_true", default=None, help="Uniformly rotated boxes")
    p.add_argument("--max-boxes", type=int, default=None, help="Expected boxes per field budget")
    p.add_argument("--chunk", type=int, default=None, help="Replicates per worker task")


def _grid_args(p):
    p.add_argument("--t-grid", default=None, help="lo:hi:n evaluation grid")
    p.add_argument("--points", type=int, default=None, help="Default grid size")


def _compare_args(p):
    p.add_argument("--samples", default=None, help="Samples CSV (header 'value')")
    p.add_argument("--reference", choices=["limit", "prelimit"], default=None, help="Reference CF")
    p.add_argument("--band-factor", type=float, default=None, help="Monte-Carlo band factor k in k/√N")
    p.add_argument("--report", default=None, help="Report JSON path")


def _render_args(p):
    p.add_argument("--pixels", default=None, help="WIDTHxHEIGHT")
    p.add_argument("--viewport", default=None, help="x0,y0,x1,y1 in model coordinates")
    p.add_argument("--fill", choices=["binary", "alpha"], default=None)
    p.add_argument("--format", choices=["png", "svg"], default=None)


def _lemma_args(p):
    p.add_argument("--rho-ladder", default=None, help="Comma-separated ρ values")


def _suite_args(p):
    p.add_argument("--name", default=None, help="Suite name")
    p.add_argument("--full", action="store_true", default=None, help="Desk-scale sizes")


def _floats(text: str | None, what: str) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what} must be comma-separated numbers (got {text!r})") from exc


def _overrides(args: argparse.Namespace) -> dict:
    """Flags → nested config mapping. Unset flags stay None and do not override."""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    replicates = get("replicates")
    suite_cmd = args.command_name == "suite"
    return {
        "command": args.command_name,
        "logging": {"level": "DEBUG" if args.verbose else None},
        "run": {"seed": get("seed"), "threads": get("threads"), "out": get("out"), "ledger": get("ledger")},
        "model": {
            "regime": get("regime"), "gamma1": get("gamma1"), "gamma2": get("gamma2"), "rho": get("rho"),
            "lambda_rho": get("lambda_rho"), "delta": get("delta"), "eta": get("eta"),
            "a_scale": get("a_scale"), "umin1": get("umin1"), "umin2": get("umin2"), "measure": get("measure"),
        },
        "simulation": {"replicates": None if suite_cmd else replicates, "rotate": get("rotate"),
                       "max_boxes": get("max_boxes"), "chunk": get("chunk")},
        "tolerance": {"quad_constants": get("tol"), "quad_cf": get("cf_tol"), "trunc_fraction": get("eps_trunc")},
        "grid": {"t_grid": get("t_grid"), "points": get("points")},
        "compare": {"samples": get("samples"), "reference": get("reference"),
                    "band_factor": get("band_factor"), "report": get("report")},
        "render": {"pixels": get("pixels"), "viewport": _floats(get("viewport"), "viewport"),
                   "fill": get("fill"), "format": get("format")},
        "lemma": {"rho_ladder": _floats(get("rho_ladder"), "rho-ladder")},
        "suite": {"name": get("name"), "full": get("full"), "replicates": replicates if suite_cmd else None},
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxfield",
        description="Simulation and verification engine for the random boxes model.",
        epilog="Run 'boxfield <command> --help' for command-specific options.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", "-V", action="version", version=f"boxfield {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>")
    common = [_common_parser()]

    _add_command(sub, ["simulate", "sim"], "Monte-Carlo draws of the normalized field",
                 (_model_args, _simulation_args), common)
    _add_command(sub, ["prelimit-cf", "pcf"], "Exact pre-limit characteristic function",
                 (_model_args, _simulation_args, _grid_args), common)
    _add_command(sub, ["limit-cf", "lcf"], "Characteristic function of the limit law",
                 (_model_args, _grid_args), common)
    _add_command(sub, ["limit-var", "var"], "Variance of a Gaussian limit", (_model_args,), common)
    _add_command(sub, ["stable-params", "stable"], "Stable parameters of the points-regime limit",
                 (_model_args,), common)
    _add_command(sub, ["compare", "cmp"], "Empirical CF against a reference",
                 (_model_args, _simulation_args, _grid_args, _compare_args), common)
    _add_command(sub, ["render", "draw"], "Rasterize one field to PNG or SVG",
                 (_model_args, _simulation_args, _render_args), common)
    _add_command(sub, ["lemma-check", "lemma"], "Edge-integral asymptotics along a ρ-ladder",
                 (_model_args, _lemma_args), common)
    _add_command(sub, ["suite", "check"], "Run a named acceptance suite",
                 (_model_args, _simulation_args, _suite_args), common)
    _add_command(sub, ["plan"], "Print the resolved scaling plan", (_model_args, _simulation_args), common)

    rerun = _add_command(sub, ["rerun", "replay"], "Re-execute a manifest's configuration", (), common)
    rerun.add_argument("--manifest", required=True, help="Manifest JSON written by an earlier run")
    return parser


def _rerun_config(args: argparse.Namespace) -> RunConfig:
    manifest = read_manifest(args.manifest)
    cfg = validate_config(manifest["config"])
    logger.info("re-running %s from %s", cfg.command, args.manifest)
    if args.ledger:
        cfg = cfg.with_overrides({"run": {"ledger": args.ledger}})
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK

    try:
        if args.command_name == "rerun":
            cfg = _rerun_config(args)
        else:
            cfg = resolve_run_config(args.config, _overrides(args))
    except BoxfieldError as exc:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
        logger.error("%s", exc)
        return exc.exit_code

    _setup_logging(cfg, verbose=args.verbose, quiet=args.quiet)
    try:
        return run(cfg)
    except BoxfieldError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
