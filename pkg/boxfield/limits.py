"""
The six limiting fields: Gaussian covariances, compensated-Poisson CF oracles,
the stable law of the points regime, and samplers for the latter two.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.stats import levy_stable

from boxfield.errors import DomainError, MembershipError, RegimeConstraintError
from boxfield.measures import (
    M_HIGH,
    M_L,
    M_P,
    MeasureDescriptor,
    density_inner,
    dilate,
    phi_bound_constant,
    stable_params,
    total_mass,
)
from boxfield.process import (
    Regime,
    ScalingPlan,
    TruncationReport,
    replicate_rng,
    simulate_normalized,
    truncation_budget,
)
from boxfield.quadrature import box_covariance, cf_box_exponent, cf_line_exponent, line_covariance
from boxfield.tails import EdgeLaw, edge_law, moment, partial_moment, sample_edge, sample_size_biased

logger = logging.getLogger(__name__)


class LawKind(str, Enum):
    GAUSSIAN = "gaussian"
    STABLE = "stable"
    CF_ORACLE = "cf_oracle"


@dataclass(frozen=True)
class LimitLaw:
    kind: LawKind
    variance: float | None = None
    alpha: float | None = None
    sigma: float | None = None
    beta: float | None = None
    oracle: Callable[[float], complex] | None = field(default=None, compare=False, repr=False)
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind is LawKind.GAUSSIAN and not (self.variance is not None and self.variance >= 0.0):
            raise DomainError(f"Gaussian limit needs a nonnegative variance (got {self.variance})")
        if self.kind is LawKind.STABLE:
            if not (1.0 < self.alpha < 2.0 and self.sigma >= 0.0 and -1.0 <= self.beta <= 1.0):
                raise DomainError(f"invalid stable parameters α={self.alpha} σ={self.sigma} β={self.beta}")
        if self.kind is LawKind.CF_ORACLE and self.oracle is None:
            raise DomainError("CF-oracle limit needs an oracle")

    def cf(self, t):
        """Characteristic function on a scalar or an array of arguments."""
        t_arr = np.asarray(t, dtype=float)
        if self.kind is LawKind.GAUSSIAN:
            out = np.exp(-0.5 * self.variance * t_arr * t_arr) + 0j
        elif self.kind is LawKind.STABLE:
            out = stable_cf(t_arr, self.alpha, self.sigma, self.beta)
        else:
            out = np.array([self.oracle(float(v)) for v in t_arr.ravel()], dtype=complex).reshape(t_arr.shape)
        return out[()] if out.ndim == 0 else out

    def describe(self) -> dict:
        out = {"kind": self.kind.value, **self.provenance}
        if self.kind is LawKind.GAUSSIAN:
            out["variance"] = self.variance
        elif self.kind is LawKind.STABLE:
            out.update(alpha=self.alpha, sigma=self.sigma, beta=self.beta)
        return out


def _require_space(mu: MeasureDescriptor, space: str, what: str) -> None:
    if space not in mu.membership:
        raise MembershipError(f"{what} needs μ in {space}; this measure lies in {sorted(mu.membership)}")


def _require_indices(gamma1: float, gamma2: float, both_below_two: bool) -> None:
    if not 1.0 < gamma1 < 2.0:
        raise RegimeConstraintError(f"limit requires 1 < γ₁ < 2 (got γ₁={gamma1})")
    if both_below_two and not 1.0 < gamma2 < 2.0:
        raise RegimeConstraintError(f"limit requires 1 < γ₂ < 2 (got γ₂={gamma2})")
    if not gamma1 < gamma2:
        raise RegimeConstraintError(f"limit requires γ₁ < γ₂ (got γ₁={gamma1}, γ₂={gamma2})")


# ---------------------------------------------------------------------------
# Evaluators
# ---------------------------------------------------------------------------

def variance_high(mu: MeasureDescriptor, nu: MeasureDescriptor, gamma1: float, gamma2: float,
                  tol: float = 1e-7) -> float:
    """C_Z(μ,ν) = ∫∫ μ(B(x,u))·ν(B(x,u))·u₁^{−γ₁−1}u₂^{−γ₂−1} dx du."""
    _require_indices(gamma1, gamma2, both_below_two=True)
    _require_space(mu, M_HIGH, "C_Z")
    _require_space(nu, M_HIGH, "C_Z")
    return box_covariance(mu, nu, ((gamma1, 1.0, 0.0), (gamma2, 1.0, 0.0)), tol)


def cf_intermediate(mu: MeasureDescriptor, gamma1: float, gamma2: float, t: float,
                    tol: float = 1e-5, a_scale: float = 1.0) -> complex:
    """CF of J_I(μ_a) at t."""
    _require_indices(gamma1, gamma2, both_below_two=True)
    _require_space(mu, M_HIGH, "J_I")
    target = dilate(mu, a_scale) if a_scale != 1.0 else mu
    return cf_box_exponent(target, gamma1, gamma2, t, tol)


def variance_gaussian_lines(mu: MeasureDescriptor, gamma1: float, law2: EdgeLaw, tol: float = 1e-7) -> float:
    """σ² = ∫ u₂²·(segment mass of f_μ along x₁)²·f₂(u₂)·u₁^{−γ₁−1} d(x,u)."""
    if not law2.gamma > 2.0:
        raise RegimeConstraintError(f"Gaussian-lines variance requires γ₂ > 2 (got γ₂={law2.gamma})")
    if not 1.0 < gamma1 < 2.0:
        raise RegimeConstraintError(f"Gaussian-lines variance requires 1 < γ₁ < 2 (got γ₁={gamma1})")
    _require_space(mu, M_L, "σ²")
    if mu.is_zero:
        return 0.0
    return moment(law2, 2.0) * line_covariance(mu, mu, gamma1, tol)


def cf_poisson_lines(mu: MeasureDescriptor, gamma1: float, law2: EdgeLaw, t: float,
                     tol: float = 1e-5, a_scale: float = 1.0) -> complex:
    """CF of J_L(μ_a) at t."""
    _require_indices(gamma1, law2.gamma, both_below_two=False)
    _require_space(mu, M_L, "J_L")
    target = dilate(mu, a_scale) if a_scale != 1.0 else mu
    return cf_line_exponent(target, gamma1, law2, t, tol)


def stable_cf(t, alpha: float, sigma: float, beta: float):
    """exp(−σ^α|t|^α(1 − iβ·sign(t)·tan(πα/2)))."""
    t = np.asarray(t, dtype=float)
    power = (sigma * np.abs(t)) ** alpha
    out = np.exp(-power * (1.0 - 1j * beta * np.sign(t) * math.tan(math.pi * alpha / 2.0)))
    return out[()] if out.ndim == 0 else out


def stable_limit(mu: MeasureDescriptor, gamma1: float, gamma2: float, law2: EdgeLaw | None = None) -> LimitLaw:
    """The points-regime limit S_{γ₁}(μ); c_{γ₁,γ₂} stays in the normalizer."""
    _require_indices(gamma1, gamma2, both_below_two=False)
    if law2 is not None and not math.isclose(law2.gamma, gamma2, rel_tol=1e-12):
        raise DomainError(f"width law has γ={law2.gamma}, expected γ₂={gamma2}")
    params = stable_params(mu, gamma1)
    return LimitLaw(LawKind.STABLE, alpha=gamma1, sigma=params.sigma, beta=params.beta,
                    provenance={"regime": Regime.POINTS.value, "gamma1": gamma1, "gamma2": gamma2})


def variance_finite(mu: MeasureDescriptor, nu: MeasureDescriptor) -> float:
    """C_X(μ,ν) = ∫ f_μ·f_ν."""
    return density_inner(mu, nu)


def limit_law(plan: ScalingPlan, mu: MeasureDescriptor, tol: float = 1e-7, cf_tol: float = 1e-5) -> LimitLaw:
    """Reference law of the normalized centred functional under `plan` as ρ → 0."""
    regime, g1, g2, a = plan.regime, plan.gamma1, plan.gamma2, plan.a_scale
    provenance = {"regime": regime.value, "gamma1": g1, "gamma2": g2, "a_scale": a}
    if regime is Regime.HIGH:
        return LimitLaw(LawKind.GAUSSIAN, variance=variance_high(mu, mu, g1, g2, tol), provenance=provenance)
    if regime is Regime.INTERMEDIATE:
        _require_indices(g1, g2, both_below_two=True)
        _require_space(mu, M_HIGH, "J_I")
        return LimitLaw(LawKind.CF_ORACLE, oracle=lambda t: cf_intermediate(mu, g1, g2, t, cf_tol, a),
                        provenance=provenance)
    if regime is Regime.GAUSSIAN_LINES:
        sigma2 = variance_gaussian_lines(mu, g1, plan.law2, tol)
        return LimitLaw(LawKind.GAUSSIAN, variance=a * a * sigma2, provenance=provenance)
    if regime is Regime.POISSON_LINES:
        _require_indices(g1, g2, both_below_two=False)
        _require_space(mu, M_L, "J_L")
        law2 = plan.law2
        return LimitLaw(LawKind.CF_ORACLE, oracle=lambda t: cf_poisson_lines(mu, g1, law2, t, cf_tol, a),
                        provenance=provenance)
    if regime is Regime.POINTS:
        _require_space(mu, M_P, "S_γ₁")
        return stable_limit(mu, g1, g2, plan.law2)
    return LimitLaw(LawKind.GAUSSIAN, variance=variance_finite(mu, mu), provenance=provenance)


# ---------------------------------------------------------------------------
# Curvature and similarity
# ---------------------------------------------------------------------------

def cf_curvature(cf: Callable[[float], complex], h: float) -> float:
    """−φ''(0) from the five-point stencil; the variance when it is finite."""
    values = [cf(k * h) for k in (-2, -1, 0, 1, 2)]
    second = (-values[0] + 16.0 * values[1] - 30.0 * values[2] + 16.0 * values[3] - values[4]) / (12.0 * h * h)
    return float(-complex(second).real)


def curvature_profile(cf: Callable[[float], complex], steps) -> np.ndarray:
    """cf_curvature along decreasing steps; growth without bound signals an infinite variance."""
    return np.array([cf_curvature(cf, float(h)) for h in steps])


_SELF_SIMILAR = {
    Regime.HIGH: lambda g1, g2: (2.0 - g1 - g2) / 2.0,
    Regime.GAUSSIAN_LINES: lambda g1, g2: -g1 / 2.0,
    Regime.FINITE_VARIANCE: lambda g1, g2: -1.0,
    Regime.POINTS: lambda g1, g2: 2.0 / g1 - 2.0,
}


def self_similarity_index(regime: "Regime | str", gamma1: float, gamma2: float) -> float | None:
    """H with X(μ_a) =d a^H·X(μ); None where the limit is not self-similar."""
    rule = _SELF_SIMILAR.get(Regime.parse(regime))
    return None if rule is None else rule(gamma1, gamma2)


def aggregate_scale(regime: "Regime | str", gamma1: float, gamma2: float, m: float) -> float | None:
    """a_m with X(μ_{a_m}) =d Σ of m i.i.d. copies of X(μ); None for J_L."""
    if not m > 0:
        raise DomainError(f"aggregation count must be positive (got {m})")
    regime = Regime.parse(regime)
    if regime in (Regime.HIGH, Regime.INTERMEDIATE):
        return m ** (1.0 / (2.0 - gamma1 - gamma2))
    if regime is Regime.GAUSSIAN_LINES:
        return m ** (-1.0 / gamma1)
    if regime is Regime.FINITE_VARIANCE:
        return m ** -0.5
    if regime is Regime.POINTS:
        return m ** (1.0 / (2.0 - 2.0 * gamma1))
    return None


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_stable(alpha: float, sigma: float, beta: float, rng: np.random.Generator, size=None):
    """Draws with CF exp(−σ^α|t|^α(1 − iβ·sign(t)·tan(πα/2)))."""
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"stable index must lie in (1, 2) (got {alpha})")
    if not -1.0 <= beta <= 1.0:
        raise DomainError(f"skewness must lie in [−1, 1] (got {beta})")
    if sigma < 0.0:
        raise DomainError(f"scale must be nonnegative (got {sigma})")
    if sigma == 0.0:
        return np.zeros(size) if size is not None else 0.0
    return levy_stable.rvs(alpha, beta, loc=0.0, scale=sigma, size=size, random_state=rng)


def _min_power_integral(gamma: float) -> float:
    """∫₀^∞ min(u,u²)·u^{−γ−1} du."""
    return 1.0 / (2.0 - gamma) + 1.0 / (gamma - 1.0)


@dataclass(frozen=True)
class CompensatedSample:
    values: np.ndarray
    cut: float
    small_jump_variance: float
    report: TruncationReport

    def describe(self) -> dict:
        return {
            "cut": self.cut,
            "small_jump_variance": self.small_jump_variance,
            "truncation": self.report.describe(),
            "count": int(self.values.size),
        }


def _box_jumps_plan(gamma1: float, gamma2: float, cut: float) -> ScalingPlan:
    # u^{−γ−1}du on [cut, ∞) is (cut^{−γ}/γ)·Pareto(γ, cut)
    lam = cut ** (-gamma1) / gamma1 * cut ** (-gamma2) / gamma2
    return ScalingPlan(regime=Regime.INTERMEDIATE, gamma1=gamma1, gamma2=gamma2, rho=1.0,
                       lambda_rho=lam, n_rho=1.0, umin1=cut, umin2=cut)


def _line_draw(mu: MeasureDescriptor, law1: EdgeLaw, law2: EdgeLaw, lam: float, half: float, cap: float,
               rng: np.random.Generator) -> float:
    """One compensated draw of Σ u₂·L(x, u₁) over lines whose segment meets [−L, L]²."""
    side = 2.0 * half
    total = 0.0
    for coef, power in ((side * side, 0), (side, 1)):
        count = int(rng.poisson(lam * coef * partial_moment(law1, power, cap)))
        if count == 0:
            continue
        u1 = sample_edge(law1, rng, size=count, cap=cap) if power == 0 else sample_size_biased(law1, 1, cap, rng, count)
        u2 = sample_edge(law2, rng, size=count)
        x1 = rng.uniform(-1.0, 1.0, size=count) * (half + u1 / 2.0)
        x2 = rng.uniform(-half, half, size=count)
        total += float(np.sum(u2 * mu.line_mass_xy(x1, x2, u1)))
    centring = lam * moment(law2, 1.0) * total_mass(mu) * partial_moment(law1, 1.0, cap)
    return total - centring


def sample_compensated_poisson(
    regime: "Regime | str",
    mu: MeasureDescriptor,
    gamma1: float,
    gamma2: float,
    cut: float,
    replicates: int,
    seed: int,
    *,
    law2: EdgeLaw | None = None,
    a_scale: float = 1.0,
    eps_trunc: float = 1e-5,
    max_boxes: int = 2_000_000,
    threads: int = 1,
) -> CompensatedSample:
    """Draws of J_I or J_L with jumps of edge below `cut` removed (biased; bound reported)."""
    regime = Regime.parse(regime)
    if not 0.0 < cut <= 1.0:
        raise DomainError(f"jump cut must lie in (0, 1] (got {cut})")
    target = dilate(mu, a_scale) if a_scale != 1.0 else mu
    if regime is Regime.INTERMEDIATE:
        _require_indices(gamma1, gamma2, both_below_two=True)
        _require_space(mu, M_HIGH, "J_I")
        plan = _box_jumps_plan(gamma1, gamma2, cut)
        report = truncation_budget(plan, target, eps_trunc, max_boxes=max_boxes)
        values = simulate_normalized(plan, target, replicates, seed, threads=threads, report=report)
        bound = phi_bound_constant(target) * (
            cut ** (2.0 - gamma1) / (2.0 - gamma1) * _min_power_integral(gamma2)
            + _min_power_integral(gamma1) * cut ** (2.0 - gamma2) / (2.0 - gamma2)
        )
        logger.info("J_I sampled with cut %.3g: %d boxes/field expected, small-jump variance ≤ %.3g",
                    cut, report.expected_count, bound)
        return CompensatedSample(values, cut, bound, report)

    if regime is not Regime.POISSON_LINES:
        raise DomainError(f"compensated Poisson sampling covers intermediate and poisson_lines, not {regime.value}")
    law2 = law2 or edge_law(gamma2)
    _require_indices(gamma1, law2.gamma, both_below_two=False)
    _require_space(mu, M_L, "J_L")
    law1 = edge_law(gamma1, cut)
    lam = cut ** (-gamma1) / gamma1
    equivalent = ScalingPlan(regime=Regime.POISSON_LINES, gamma1=gamma1, gamma2=law2.gamma, rho=1.0,
                             lambda_rho=lam, n_rho=1.0, umin1=cut, umin2=law2.u_min)
    report = truncation_budget(equivalent, target, eps_trunc, max_boxes=max_boxes)

    def draw(j: int) -> float:
        return _line_draw(target, law1, law2, lam, report.window_half, report.caps[0], replicate_rng(seed, j))

    if threads <= 1:
        values = np.array([draw(j) for j in range(replicates)])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = np.array(list(pool.map(draw, range(replicates))))
    if law2.gamma > 2.0:
        amp = sum(abs(w * p.amplitude) * math.sqrt(p.k1.power_integral(2.0) * p.k2.power_integral(2.0))
                  for w, p in target.terms)
        bound = moment(law2, 2.0) * amp * amp * cut ** (2.0 - gamma1) / (2.0 - gamma1)
    else:
        bound = math.inf
    logger.info("J_L sampled with cut %.3g: small-jump variance ≤ %.3g", cut, bound)
    return CompensatedSample(values, cut, bound, report)
