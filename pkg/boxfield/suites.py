"""
Named acceptance suites.

Each suite is a list of checks; a check records its name, a pass flag, the
measured values and its wall time. A suite passes iff every check passes.
Checks that raise a BoxfieldError are recorded as failures with the message.

    regimes-smoke     one tiny instance of all six regimes, end to end
    constants         Ψ-integral against d_γ, closed-form integrals
    invariants        dilation and translation identities, maximal-function
                      bound, CF axioms, φ-bound certificates
    lemma             edge-integral asymptotics
    oracle            empirical CF against the pre-limit CF, every regime
    ladder            pre-limit CF approaching the limit CF along ρ
    points-ks         points-regime simulations against stable draws
    finite-variance   empirical variance against ∫f_μ²
    figure            anisotropy of the Poisson-lines render, isotropy control
    determinism       byte-identical outputs across thread counts
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from boxfield.config import RunConfig
from boxfield.errors import BoxfieldError, BudgetError, ConfigError
from boxfield.limits import (
    LawKind,
    limit_law,
    sample_stable,
    self_similarity_index,
    stable_limit,
    variance_finite,
    variance_gaussian_lines,
    variance_high,
)
from boxfield.measures import (
    MeasureDescriptor,
    certify_membership,
    dilate,
    maximal_function_bound,
    parse_measure,
    stable_params,
    translate,
)
from boxfield.process import (
    Regime,
    ScalingPlan,
    TruncationReport,
    plan_regime,
    replicate_rng,
    simulate_normalized,
    truncation_budget,
)
from boxfield.quadrature import integrate_power_weighted, prelimit_cf, prelimit_variance, psi_power_integral
from boxfield.render import (
    RasterSpec,
    anisotropy_ratio,
    black_fraction,
    encode_png,
    rasterize,
    sample_render_field,
    svg,
    svg_to_raster,
)
from boxfield.stats import (
    cf_distance,
    default_t_grid,
    empirical_cf,
    ks_distance,
    lemma_ratio_check,
    min_power,
    vanishing_integral_check,
)
from boxfield.tails import d_constant

logger = logging.getLogger(__name__)

LADDER_RHOS = (1e-1, 3e-2, 1e-2, 3e-3)
DESK_RHO = 1e-2
QUICK_RHO = 0.3
FINITE_VARIANCE_LAMBDA = 1e4
TRANSLATION_SHIFT = (0.7, -1.3)
BUILTIN_MEASURES = (
    "laplace:C=1,c=1",
    "gauss:A=1,w=1",
    "box:-1,-1,1,1",
    "combo:1.0*laplace:c=1;-0.5*box:0,0,1,1",
)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str | None = None

    def describe(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "values": self.values,
               "seconds": round(self.seconds, 3)}
        if self.error:
            out["error"] = self.error
        return out


@dataclass
class SuiteReport:
    name: str
    checks: list[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def describe(self) -> dict:
        return {
            "suite": self.name,
            "verdict": self.verdict,
            "seconds": round(self.seconds, 3),
            "checks": [c.describe() for c in self.checks],
        }


@dataclass(frozen=True)
class _Context:
    cfg: RunConfig
    mu: MeasureDescriptor
    seed: int
    replicates: int
    full: bool
    threads: int
    eps_trunc: float
    max_boxes: int
    quad_tol: float
    cf_tol: float


def _check(name: str, fn: Callable[[], tuple[bool, dict]]) -> CheckResult:
    t0 = time.monotonic()
    try:
        passed, values = fn()
        result = CheckResult(name, bool(passed), values, time.monotonic() - t0)
    except BoxfieldError as exc:
        result = CheckResult(name, False, {}, time.monotonic() - t0, error=f"{type(exc).__name__}: {exc}")
    logger.info("check %-40s %s (%.2fs)", name, "ok" if result.passed else "FAIL", result.seconds)
    if result.error:
        logger.warning("check %s raised %s", name, result.error)
    return result


# ---------------------------------------------------------------------------
# Desk instances
# ---------------------------------------------------------------------------

# (γ₁, γ₂, knobs). Full runs use DESK_RHO, quick runs QUICK_RHO.
_INSTANCES: dict[Regime, tuple[float, float, dict]] = {
    Regime.HIGH: (1.3, 1.6, {"delta": 0.3}),
    Regime.INTERMEDIATE: (1.3, 1.6, {}),
    Regime.GAUSSIAN_LINES: (1.3, 2.5, {"eta": 0.5}),
    Regime.POISSON_LINES: (1.3, 2.5, {}),
    Regime.POINTS: (1.3, 2.5, {"delta": 1.0}),
    Regime.FINITE_VARIANCE: (3.0, 3.0, {"lambda_rho": 100.0}),
}

# Instances refused by the box budget retreat along these, in order.
_BACKOFF_RHOS = (3e-2, 1e-1, QUICK_RHO)
_BACKOFF_LAMBDAS = (1e3, 1e2)


def desk_plan(regime: Regime, full: bool = False, rho: float | None = None) -> ScalingPlan:
    gamma1, gamma2, knobs = _INSTANCES[regime]
    if full and regime is Regime.FINITE_VARIANCE:
        knobs = {"lambda_rho": FINITE_VARIANCE_LAMBDA}
    return plan_regime(regime, gamma1, gamma2, rho if rho is not None else (DESK_RHO if full else QUICK_RHO), **knobs)


def desk_candidates(regime: Regime, full: bool = False) -> list[ScalingPlan]:
    """The desk plan followed by the cheaper plans tried when the box budget refuses it."""
    first = desk_plan(regime, full)
    if regime is Regime.FINITE_VARIANCE:
        rest = [p for p in finite_variance_plans(first.rho) if p.lambda_rho < first.lambda_rho]
    else:
        rest = [desk_plan(regime, full, rho=rho) for rho in _BACKOFF_RHOS if rho > first.rho]
    return [first, *rest]


def _ladder_plan(regime: Regime, rho: float) -> ScalingPlan:
    gamma1, gamma2, knobs = _INSTANCES[regime]
    if regime is Regime.FINITE_VARIANCE:
        knobs = {"lambda_rho": rho ** -3.0}
    return plan_regime(regime, gamma1, gamma2, rho, **knobs)


def _budgeted(ctx: _Context, candidates: list[ScalingPlan],
              mu: MeasureDescriptor) -> tuple[ScalingPlan, TruncationReport, dict]:
    """First candidate the box budget admits, with the refusal recorded when it is not the first."""
    refusal = None
    for plan in candidates:
        try:
            report = truncation_budget(plan, mu, ctx.eps_trunc, max_boxes=ctx.max_boxes)
        except BudgetError as exc:
            logger.info("plan %s refused: %s", plan.describe(), exc)
            refusal = refusal or exc
            continue
        if refusal is None:
            return plan, report, {}
        return plan, report, {"requested": candidates[0].describe(), "budget_refusal": str(refusal)}
    raise refusal


def _simulate(ctx: _Context, plan: ScalingPlan, mu: MeasureDescriptor, replicates: int, seed: int,
              report: TruncationReport | None = None):
    if report is None:
        report = truncation_budget(plan, mu, ctx.eps_trunc, max_boxes=ctx.max_boxes)
    values = simulate_normalized(plan, mu, replicates, seed, threads=ctx.threads,
                                 chunk=ctx.cfg.simulation.chunk, report=report)
    return values, report


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _suite_regimes_smoke(ctx: _Context) -> list[CheckResult]:
    checks = []
    n = min(ctx.replicates, 50)
    for regime in Regime:
        def run(regime=regime):
            plan = desk_plan(regime)
            values, report = _simulate(ctx, plan, ctx.mu, n, ctx.seed)
            law = limit_law(plan, ctx.mu, ctx.quad_tol, ctx.cf_tol)
            phi_half = complex(law.cf(0.5))
            ok = bool(np.all(np.isfinite(values))) and abs(phi_half) <= 1.0 + 1e-6
            return ok, {"plan": plan.describe(), "mean": float(np.mean(values)), "sd": float(np.std(values)),
                        "limit": law.describe(), "limit_cf_0.5": phi_half,
                        "expected_boxes": report.expected_count}
        checks.append(_check(f"smoke/{regime.value}", run))
    return checks


def _suite_constants(ctx: _Context) -> list[CheckResult]:
    checks = []
    for gamma in (1.2, 1.5, 1.8):
        def run(gamma=gamma):
            quad = psi_power_integral(gamma)
            closed = d_constant(gamma)
            gap = abs(quad - closed)
            return gap <= 1e-8, {"gamma": gamma, "quadrature": quad, "closed_form": closed, "gap": gap}
        checks.append(_check(f"d_gamma/{gamma}", run))

    def min_power_integral():
        value = integrate_power_weighted(min_power, 1.5)
        return abs(value - 4.0) <= 1e-8, {"value": value, "expected": 4.0}

    def laplace_density_norm():
        value = variance_finite(parse_measure("laplace:C=1,c=1"), parse_measure("laplace:C=1,c=1"))
        return abs(value - 1.0) <= 1e-10, {"value": value, "expected": 1.0}

    checks.append(_check("min_power_integral/1.5", min_power_integral))
    checks.append(_check("laplace_density_norm", laplace_density_norm))
    return checks


def _suite_invariants(ctx: _Context) -> list[CheckResult]:
    mu, a = ctx.mu, 2.0
    checks = []

    def dilation(regime: Regime, gamma1: float, gamma2: float, evaluate, power: float):
        def run():
            h = self_similarity_index(regime, gamma1, gamma2)
            base, scaled = evaluate(mu), evaluate(dilate(mu, a))
            expected = a ** (power * h)
            ratio = scaled / base
            return math.isclose(ratio, expected, rel_tol=1e-4), {
                "a": a, "H": h, "ratio": ratio, "expected": expected}
        return run

    checks.append(_check("dilation/high_variance", dilation(
        Regime.HIGH, 1.3, 1.6, lambda m: variance_high(m, m, 1.3, 1.6, ctx.quad_tol), 2.0)))
    checks.append(_check("dilation/gaussian_lines_variance", dilation(
        Regime.GAUSSIAN_LINES, 1.3, 2.5,
        lambda m: variance_gaussian_lines(m, 1.3, desk_plan(Regime.GAUSSIAN_LINES).law2, ctx.quad_tol), 2.0)))
    checks.append(_check("dilation/stable_scale", dilation(
        Regime.POINTS, 1.3, 2.5, lambda m: stable_params(m, 1.3).sigma, 1.0)))
    checks.append(_check("dilation/finite_variance", dilation(
        Regime.FINITE_VARIANCE, 3.0, 3.0, lambda m: variance_finite(m, m), 2.0)))

    def translation_quadrature():
        shifted = translate(mu, TRANSLATION_SHIFT)
        base = variance_high(mu, mu, 1.3, 1.6, ctx.quad_tol)
        moved = variance_high(shifted, shifted, 1.3, 1.6, ctx.quad_tol)
        return math.isclose(base, moved, rel_tol=1e-6), {"base": base, "translated": moved}

    def translation_ks():
        plan = desk_plan(Regime.HIGH)
        n = 10_000 if ctx.full else min(ctx.replicates, 500)
        x, _ = _simulate(ctx, plan, mu, n, ctx.seed)
        y, _ = _simulate(ctx, plan, translate(mu, TRANSLATION_SHIFT), n, ctx.seed + 1)
        ks = ks_distance(x, y)
        return ks.passed, ks.describe()

    def maximal_function():
        rng = replicate_rng(ctx.seed, 0)
        points = rng.uniform(-5.0, 5.0, size=(1000, 2))
        edges = np.exp(rng.uniform(math.log(1e-3), math.log(10.0), size=(1000, 2)))
        averages = np.abs(mu.box_mass_xy(points[:, 0], points[:, 1], edges[:, 0], edges[:, 1])) / np.prod(edges, axis=1)
        bound = maximal_function_bound(mu, points)
        worst = float(np.max(averages / bound))
        return worst <= 1.0 + 1e-9, {"points": 1000, "max_ratio": worst}

    def cf_axioms():
        plan = desk_plan(Regime.HIGH)
        samples, _ = _simulate(ctx, plan, mu, min(ctx.replicates, 200), ctx.seed)
        grid = default_t_grid(samples, points=11)
        emp = empirical_cf(samples, grid)
        emp_neg = empirical_cf(samples, -grid)
        laws = [limit_law(desk_plan(r), mu, ctx.quad_tol, ctx.cf_tol)
                for r in (Regime.HIGH, Regime.POINTS, Regime.INTERMEDIATE)]
        worst_mod, worst_sym = float(np.max(np.abs(emp))), float(np.max(np.abs(emp_neg - np.conj(emp))))
        for law in laws:
            ts = np.array([0.3, 1.0])
            pos, neg = law.cf(ts), law.cf(-ts)
            worst_mod = max(worst_mod, float(np.max(np.abs(pos))))
            worst_sym = max(worst_sym, float(np.max(np.abs(neg - np.conj(pos)))))
        return worst_mod <= 1.0 + 1e-9 and worst_sym <= 10 * ctx.cf_tol, {
            "max_modulus": worst_mod, "max_conjugate_gap": worst_sym}

    checks.append(_check("translation/variance", translation_quadrature))
    checks.append(_check("translation/ks", translation_ks))
    checks.append(_check("maximal_function_bound", maximal_function))
    checks.append(_check("cf_axioms", cf_axioms))

    for text in BUILTIN_MEASURES:
        def certificate(text=text):
            cert = certify_membership(parse_measure(text), n=1000 if ctx.full else 200, seed=ctx.seed)
            return cert.passed, {"measure": text, "constant": cert.constant, "max_ratio": cert.max_ratio,
                                 "samples": cert.samples}
        checks.append(_check(f"phi_bound/{text}", certificate))
    return checks


def _suite_lemma(ctx: _Context) -> list[CheckResult]:
    lemma = ctx.cfg.lemma

    def ratios():
        report = lemma_ratio_check(gamma1=lemma.gamma1, gamma2=lemma.gamma2, rhos=lemma.rho_ladder)
        last = float(report.ratios[np.argmin(report.rhos)])
        return 0.98 <= last <= 1.02 and report.monotone, report.describe()

    def vanishing():
        values = vanishing_integral_check(gamma1=lemma.gamma1, gamma2=lemma.gamma2, rhos=lemma.rho_ladder)
        order = np.argsort(-np.asarray(lemma.rho_ladder))
        ordered = values[order]
        return bool(np.all(np.diff(ordered) < 0.0)) and ordered[-1] < ordered[0], {
            "rho": lemma.rho_ladder, "values": values}

    return [_check("lemma/min_power_ratio", ratios), _check("lemma/vanishing_family", vanishing)]


def _suite_oracle(ctx: _Context) -> list[CheckResult]:
    checks = []
    for regime in Regime:
        def run(regime=regime):
            plan, report, deviation = _budgeted(ctx, desk_candidates(regime, ctx.full), ctx.mu)
            samples, _ = _simulate(ctx, plan, ctx.mu, ctx.replicates, ctx.seed, report)
            grid = default_t_grid(samples, ctx.cfg.grid.points, ctx.cfg.grid.span)
            reference = np.array([prelimit_cf(plan, ctx.mu, float(t), ctx.cf_tol) for t in grid])
            cmp = cf_distance(samples, reference, grid, band_factor=ctx.cfg.compare.band_factor,
                              quad_tol=ctx.cf_tol, trunc_budget=report.total)
            return cmp.passed, {"plan": plan.describe(), "max_abs_gap": cmp.max_abs_gap,
                                "threshold": cmp.threshold, "samples": cmp.samples, **deviation}
        checks.append(_check(f"oracle/{regime.value}", run))
    return checks


def _law_scale(law) -> float:
    if law.kind is LawKind.GAUSSIAN:
        return math.sqrt(law.variance) if law.variance > 0 else 1.0
    if law.kind is LawKind.STABLE:
        return law.sigma if law.sigma > 0 else 1.0
    return 1.0


def _suite_ladder(ctx: _Context) -> list[CheckResult]:
    checks = []
    points = 21 if ctx.full else 9
    for regime in (Regime.HIGH, Regime.INTERMEDIATE, Regime.POISSON_LINES, Regime.POINTS,
                   Regime.FINITE_VARIANCE):
        def run(regime=regime):
            law = limit_law(_ladder_plan(regime, LADDER_RHOS[0]), ctx.mu, ctx.quad_tol, ctx.cf_tol)
            grid = np.linspace(0.25, 2.5, points) / _law_scale(law)
            limit_values = law.cf(grid)
            gaps = []
            for rho in LADDER_RHOS:
                plan = _ladder_plan(regime, rho)
                pre = np.array([prelimit_cf(plan, ctx.mu, float(t), ctx.cf_tol) for t in grid])
                gaps.append(float(np.max(np.abs(pre - limit_values))))
            monotone = all(b <= a + ctx.cf_tol for a, b in zip(gaps, gaps[1:]))
            return monotone and gaps[-1] < 0.02, {"rho": list(LADDER_RHOS), "max_gap": gaps}
        checks.append(_check(f"ladder/{regime.value}", run))

    def gaussian_lines_variance():
        law2 = desk_plan(Regime.GAUSSIAN_LINES).law2
        limit = variance_gaussian_lines(ctx.mu, 1.3, law2, ctx.quad_tol)
        ratios = [prelimit_variance(_ladder_plan(Regime.GAUSSIAN_LINES, rho), ctx.mu, ctx.quad_tol) / limit
                  for rho in LADDER_RHOS]
        return abs(ratios[-1] - 1.0) <= 0.05, {"rho": list(LADDER_RHOS), "variance_ratio": ratios}

    checks.append(_check("ladder/gaussian_lines_variance", gaussian_lines_variance))
    return checks


def _suite_points_ks(ctx: _Context) -> list[CheckResult]:
    def run():
        plan, report, deviation = _budgeted(ctx, desk_candidates(Regime.POINTS, ctx.full), ctx.mu)
        n = 100_000 if ctx.full else ctx.replicates
        samples, _ = _simulate(ctx, plan, ctx.mu, n, ctx.seed, report)
        law = stable_limit(ctx.mu, plan.gamma1, plan.gamma2, plan.law2)
        reference = sample_stable(law.alpha, law.sigma, law.beta, replicate_rng(ctx.seed, n), size=n)
        ks = ks_distance(samples, reference)
        return ks.passed, {"plan": plan.describe(), "indicator": plan.regime_indicator, **ks.describe(),
                           **deviation}
    return [_check("points/ks_vs_stable", run)]


def finite_variance_plans(rho: float = 5e-3) -> list[ScalingPlan]:
    """λ = FINITE_VARIANCE_LAMBDA first, then the smaller intensities a tight box budget falls back to."""
    gamma1, gamma2, _ = _INSTANCES[Regime.FINITE_VARIANCE]
    return [plan_regime(Regime.FINITE_VARIANCE, gamma1, gamma2, rho, lambda_rho=lam)
            for lam in (FINITE_VARIANCE_LAMBDA, *_BACKOFF_LAMBDAS)]


def _suite_finite_variance(ctx: _Context) -> list[CheckResult]:
    mu = parse_measure("laplace:C=1,c=1")
    plans = finite_variance_plans()

    def quadrature():
        ratio = prelimit_variance(plans[0], mu, ctx.quad_tol) / variance_finite(mu, mu)
        return abs(ratio - 1.0) <= 0.05, {"plan": plans[0].describe(), "variance_ratio": ratio}

    def empirical():
        plan, report, deviation = _budgeted(ctx, plans, mu)
        n = 10_000 if ctx.full else min(ctx.replicates, 2000)
        samples, _ = _simulate(ctx, plan, mu, n, ctx.seed, report)
        var = float(np.var(samples, ddof=1))
        return abs(var - 1.0) <= 0.05, {"plan": plan.describe(), "samples": n, "variance": var,
                                        "expected": 1.0, **deviation}

    return [_check("finite_variance/prelimit", quadrature), _check("finite_variance/empirical", empirical)]


def figure_plans() -> dict[str, ScalingPlan]:
    return {
        "lines": plan_regime(Regime.POISSON_LINES, 1.3, 2.5, 5e-3),
        "isotropic": plan_regime(Regime.FINITE_VARIANCE, 3.0, 3.0, 5e-3, lambda_rho=1000.0),
    }


def _suite_figure(ctx: _Context) -> list[CheckResult]:
    spec = RasterSpec(pixels=(1024, 1024) if ctx.full else (512, 512))
    plans = figure_plans()

    def lines():
        image = rasterize(sample_render_field(plans["lines"], replicate_rng(ctx.seed, 0)), spec)
        ratio = anisotropy_ratio(image)
        return ratio > 3.0, {"anisotropy": ratio, "black_fraction": black_fraction(image)}

    def isotropic():
        image = rasterize(sample_render_field(plans["isotropic"], replicate_rng(ctx.seed, 0)), spec)
        ratio = anisotropy_ratio(image)
        return ratio <= 1.5, {"anisotropy": ratio, "black_fraction": black_fraction(image)}

    def svg_agreement():
        full_spec = RasterSpec(pixels=(1024, 1024))
        field_ = sample_render_field(plans["lines"], replicate_rng(ctx.seed, 0))
        png_frac = black_fraction(rasterize(field_, full_spec))
        svg_frac = black_fraction(svg_to_raster(svg(field_, full_spec), full_spec))
        return abs(png_frac - svg_frac) <= 0.01, {"png": png_frac, "svg": svg_frac}

    return [_check("figure/lines_anisotropy", lines), _check("figure/isotropy_control", isotropic),
            _check("figure/svg_png_agreement", svg_agreement)]


def _digest(values) -> str:
    text = "\n".join("%.17g" % v for v in np.asarray(values, dtype=float))
    return hashlib.sha256(text.encode()).hexdigest()


def _suite_determinism(ctx: _Context) -> list[CheckResult]:
    plan = desk_plan(Regime.HIGH)
    n = min(ctx.replicates, 64)

    def threads():
        report = truncation_budget(plan, ctx.mu, ctx.eps_trunc, max_boxes=ctx.max_boxes)
        digests = {k: _digest(simulate_normalized(plan, ctx.mu, n, ctx.seed, threads=k, chunk=8, report=report))
                   for k in (1, 4)}
        return len(set(digests.values())) == 1, {"sha256": digests}

    def renders():
        spec = RasterSpec(pixels=(256, 256))
        plan_lines = figure_plans()["lines"]
        hashes = [hashlib.sha256(encode_png(rasterize(sample_render_field(plan_lines, replicate_rng(ctx.seed, 0)),
                                                      spec))).hexdigest() for _ in range(2)]
        return hashes[0] == hashes[1], {"sha256": hashes[0]}

    return [_check("determinism/threads", threads), _check("determinism/render", renders)]


SUITES: dict[str, Callable[[_Context], list[CheckResult]]] = {
    "regimes-smoke": _suite_regimes_smoke,
    "constants": _suite_constants,
    "invariants": _suite_invariants,
    "lemma": _suite_lemma,
    "oracle": _suite_oracle,
    "ladder": _suite_ladder,
    "points-ks": _suite_points_ks,
    "finite-variance": _suite_finite_variance,
    "figure": _suite_figure,
    "determinism": _suite_determinism,
}


def run_suite(name: str, cfg: RunConfig) -> SuiteReport:
    """Run one named suite under `cfg` (seed, threads, tolerances, replicate count)."""
    runner = SUITES.get(name)
    if runner is None:
        raise ConfigError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    ctx = _Context(
        cfg=cfg,
        mu=parse_measure(cfg.model.measure),
        seed=cfg.run.seed,
        replicates=cfg.suite.replicates,
        full=cfg.suite.full,
        threads=cfg.run.threads,
        eps_trunc=cfg.tolerance.eps_trunc,
        max_boxes=cfg.simulation.max_boxes,
        quad_tol=cfg.tolerance.quad_constants,
        cf_tol=cfg.tolerance.quad_cf,
    )
    logger.info("suite %s: %d replicates, full=%s", name, ctx.replicates, ctx.full)
    t0 = time.monotonic()
    report = SuiteReport(name, runner(ctx))
    report.seconds = time.monotonic() - t0
    logger.info("suite %s: %s (%d checks, %.1fs)", name, report.verdict, len(report.checks), report.seconds)
    return report
