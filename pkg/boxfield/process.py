"""
Regime planning, Poisson box-field sampling and the centred functional.

A ScalingPlan fixes (ρ, λ_ρ, n_ρ) for one of the six scaling regimes. The
sampler draws the Poisson process of boxes restricted to those whose bounding
region meets the window W = [−L, L]², with edge caps; both truncations are
sized so that the discarded part of the normalized functional stays below
the requested budget (TruncationReport).

Restricting to boxes that meet W makes the centre region depend on the edges:
its area is a polynomial in (u₁, u₂), so the process splits exactly into
independent Poisson components whose edges follow size-biased capped Pareto
laws and whose centres are uniform on the edge-dependent region.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from boxfield.errors import (
    BudgetError,
    ContractError,
    DomainError,
    RegimeConstraintError,
    UnsupportedOperationError,
)
from boxfield.measures import MeasureDescriptor, rotated_box_mass, total_mass, variation_bound
from boxfield.tails import (
    EdgeLaw,
    cap_for_tail_moment,
    edge_law,
    limit_constants,
    moment,
    partial_moment,
    sample_edge,
    sample_size_biased,
    tail_moment,
)

logger = logging.getLogger(__name__)

# Caps never go below this many u_min, whatever the budget allows.
_CAP_FLOOR = 1e6
_EQ_TOL = 1e-12


class Regime(str, Enum):
    HIGH = "high"
    INTERMEDIATE = "intermediate"
    GAUSSIAN_LINES = "gaussian_lines"
    POISSON_LINES = "poisson_lines"
    POINTS = "points"
    FINITE_VARIANCE = "finite_variance"

    @classmethod
    def parse(cls, text: "str | Regime") -> "Regime":
        if isinstance(text, Regime):
            return text
        key = str(text).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise DomainError(
                f"unknown regime {text!r}; expected one of {[r.value for r in cls]}"
            ) from None


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingPlan:
    """One regime instance. `split` > 1 marks one of `split` equal-intensity parts."""

    regime: Regime
    gamma1: float
    gamma2: float
    rho: float
    lambda_rho: float
    n_rho: float
    eta: float | None = None
    a_scale: float = 1.0
    delta: float | None = None
    umin1: float | None = None
    umin2: float | None = None
    split: int = 1

    @property
    def law1(self) -> EdgeLaw:
        return edge_law(self.gamma1, self.umin1)

    @property
    def law2(self) -> EdgeLaw:
        return edge_law(self.gamma2, self.umin2)

    @property
    def token(self) -> str:
        payload = json.dumps(self.describe(with_token=False), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @property
    def regime_indicator(self) -> float:
        """λ_ρ·ρ^{γ₁} for the low-intensity regimes, λ_ρ·ρ^{γ₁+γ₂} otherwise."""
        if self.regime in (Regime.HIGH, Regime.INTERMEDIATE):
            return self.lambda_rho * self.rho ** (self.gamma1 + self.gamma2)
        return self.lambda_rho * self.rho ** self.gamma1

    def centring(self, mu: MeasureDescriptor, caps: tuple[float, float] = (math.inf, math.inf)) -> float:
        """E Σ μ(B(x_j, ρu_j)) over boxes with u_i ≤ caps_i: λρ²·μ(R²)·E[u₁;≤c₁]·E[u₂;≤c₂]."""
        m1 = partial_moment(self.law1, 1.0, caps[0])
        m2 = partial_moment(self.law2, 1.0, caps[1])
        return self.lambda_rho * self.rho ** 2 * total_mass(mu) * m1 * m2

    def describe(self, with_token: bool = True) -> dict:
        out = asdict(self)
        out["regime"] = self.regime.value
        if with_token:
            out["token"] = self.token
        return out


def _hypothesis(ok: bool, inequality: str, regime: Regime) -> None:
    if not ok:
        raise RegimeConstraintError(f"{regime.value} regime requires {inequality}")


def _check_hypotheses(regime: Regime, gamma1: float, gamma2: float, eta: float | None) -> None:
    if regime is Regime.FINITE_VARIANCE:
        _hypothesis(gamma1 > 2.0, f"γ₁ > 2 (got γ₁={gamma1})", regime)
        _hypothesis(gamma1 <= gamma2, f"γ₁ ≤ γ₂ (got γ₁={gamma1}, γ₂={gamma2})", regime)
        return
    _hypothesis(1.0 < gamma1 < 2.0, f"1 < γ₁ < 2 (got γ₁={gamma1})", regime)
    _hypothesis(gamma1 < gamma2, f"γ₁ < γ₂ (got γ₁={gamma1}, γ₂={gamma2})", regime)
    if regime in (Regime.HIGH, Regime.INTERMEDIATE):
        _hypothesis(gamma2 < 2.0, f"γ₂ < 2 (got γ₂={gamma2})", regime)
    if regime is Regime.GAUSSIAN_LINES:
        _hypothesis(gamma2 > 2.0, f"γ₂ > 2 (got γ₂={gamma2})", regime)
        _hypothesis(eta is not None and 0.0 < eta < gamma2, f"0 < η < γ₂ (got η={eta})", regime)


def plan_regime(
    regime: "Regime | str",
    gamma1: float,
    gamma2: float,
    rho: float,
    *,
    delta: float = 0.3,
    eta: float | None = None,
    a_scale: float = 1.0,
    lambda_rho: float | None = None,
    umin1: float | None = None,
    umin2: float | None = None,
) -> ScalingPlan:
    """Canonical λ_ρ and normalizer n_ρ for a regime at shrink factor ρ."""
    regime = Regime.parse(regime)
    if not rho > 0:
        raise DomainError(f"ρ must be positive (got {rho})")
    if not a_scale > 0:
        raise DomainError(f"scale factor a must be positive (got {a_scale})")
    _check_hypotheses(regime, gamma1, gamma2, eta)
    if regime in (Regime.HIGH, Regime.POINTS, Regime.FINITE_VARIANCE) and a_scale != 1.0:
        raise DomainError(f"{regime.value} regime takes no scale factor (a must be 1)")
    if lambda_rho is not None and regime is not Regime.FINITE_VARIANCE:
        logger.warning("λ_ρ override ignored: %s regime sets λ_ρ from ρ", regime.value)

    a = a_scale
    g12 = gamma1 + gamma2
    law1, law2 = edge_law(gamma1, umin1), edge_law(gamma2, umin2)
    knobs = {"delta": None, "eta": None}
    if regime is Regime.HIGH:
        lam = rho ** (-g12 - delta)
        norm = math.sqrt(lam * rho ** g12)
        knobs["delta"] = delta
    elif regime is Regime.INTERMEDIATE:
        lam = a ** (2.0 - g12) * rho ** (-g12)
        norm = 1.0
    elif regime is Regime.GAUSSIAN_LINES:
        lam = a * a * rho ** (-(gamma1 + eta))
        norm = rho ** (1.0 - eta / 2.0)
        knobs["eta"] = eta
    elif regime is Regime.POISSON_LINES:
        lam = a ** (2.0 - gamma1) * rho ** (-gamma1)
        norm = a * rho
    elif regime is Regime.POINTS:
        lam = rho ** (-gamma1 + delta)
        constants = limit_constants(gamma1, gamma2, law2, law1)
        norm = constants.c_gamma1_gamma2 * lam ** (1.0 / gamma1) * rho ** 2
        knobs["delta"] = delta
    else:
        if lambda_rho is None:
            raise DomainError("finite_variance regime needs an explicit λ_ρ")
        lam = float(lambda_rho)
        norm = rho ** 2 * math.sqrt(lam * moment(law1, 2.0) * moment(law2, 2.0))

    plan = ScalingPlan(
        regime=regime, gamma1=float(gamma1), gamma2=float(gamma2), rho=float(rho),
        lambda_rho=lam, n_rho=norm, eta=knobs["eta"], a_scale=float(a),
        delta=knobs["delta"], umin1=umin1, umin2=umin2,
    )
    logger.debug("plan %s: λ_ρ=%.6g n_ρ=%.6g", regime.value, lam, norm)
    return plan


def classify_regime(gamma1: float, gamma2: float, kappa: float) -> Regime:
    """Regime of λ_ρ = ρ^{−κ} as ρ → 0."""
    if not kappa > 0:
        raise DomainError(f"intensity exponent κ must be positive (got {kappa})")
    if gamma1 > 2.0:
        return Regime.FINITE_VARIANCE
    g12 = gamma1 + gamma2
    if math.isclose(kappa, g12, rel_tol=_EQ_TOL):
        return Regime.INTERMEDIATE
    if kappa > g12:
        return Regime.HIGH
    if math.isclose(kappa, gamma1, rel_tol=_EQ_TOL):
        return Regime.POISSON_LINES
    if kappa < gamma1:
        return Regime.POINTS
    if not gamma2 > 2.0:
        raise RegimeConstraintError(
            f"κ={kappa} lies between γ₁ and γ₁+γ₂, which needs γ₂ > 2 (got γ₂={gamma2})"
        )
    return Regime.GAUSSIAN_LINES


def regime_ladder(regime: "Regime | str", gamma1: float, gamma2: float, rhos, **knobs) -> list[ScalingPlan]:
    """Plans along a ρ-sequence, checking the regime's monotone indicator."""
    plans = [plan_regime(regime, gamma1, gamma2, rho, **knobs) for rho in rhos]
    ordered = sorted(plans, key=lambda p: -p.rho)
    values = [p.regime_indicator for p in ordered]
    reg = plans[0].regime if plans else None
    if reg is Regime.POINTS and any(b >= a for a, b in zip(values, values[1:])):
        raise RegimeConstraintError("points regime requires λ_ρ·ρ^{γ₁} to decrease as ρ decreases")
    if reg is Regime.HIGH and any(b <= a for a, b in zip(values, values[1:])):
        raise RegimeConstraintError("high regime requires λ_ρ·ρ^{γ₁+γ₂} to increase as ρ decreases")
    return plans


def split_plan(plan: ScalingPlan, parts: int) -> list[ScalingPlan]:
    """`parts` independent sub-plans of intensity λ_ρ/parts, same normalizer."""
    if parts < 1:
        raise DomainError("parts must be at least 1")
    return [replace(plan, lambda_rho=plan.lambda_rho / parts, split=plan.split * parts) for _ in range(parts)]


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationReport:
    window_half: float
    caps: tuple[float, float]
    eps_trunc: float
    discarded_cap_mass: float
    discarded_window_mass: float
    expected_count: float
    rotated: bool = False
    budget_limited: bool = False

    @property
    def total(self) -> float:
        return self.discarded_cap_mass + self.discarded_window_mass

    def describe(self) -> dict:
        out = asdict(self)
        out["caps"] = list(self.caps)
        out["total"] = self.total
        return out


def _mixture_terms(half: float, rho: float, rotate: bool) -> list[tuple[float, int, int]]:
    """Area of the centre region as Σ coef·u₁^a·u₂^b."""
    side = 2.0 * half
    if rotate:
        return [(side * side, 0, 0), (2.0 * side * rho, 1, 0), (2.0 * side * rho, 0, 1),
                (rho * rho, 2, 0), (2.0 * rho * rho, 1, 1), (rho * rho, 0, 2)]
    return [(side * side, 0, 0), (side * rho, 1, 0), (side * rho, 0, 1), (rho * rho, 1, 1)]


def _expected_count(plan: ScalingPlan, half: float, caps, rotate: bool) -> float:
    law1, law2 = plan.law1, plan.law2
    total = 0.0
    for coef, a, b in _mixture_terms(half, plan.rho, rotate):
        total += coef * partial_moment(law1, a, caps[0]) * partial_moment(law2, b, caps[1])
    return plan.lambda_rho * total


def _cap_mass(plan: ScalingPlan, norm_mu: float, caps) -> float:
    law1, law2 = plan.law1, plan.law2
    scale = plan.lambda_rho * plan.rho ** 2 * norm_mu / plan.n_rho
    m1, m2 = moment(law1, 1.0), moment(law2, 1.0)
    return scale * (tail_moment(law1, 1.0, caps[0]) * m2 + tail_moment(law2, 1.0, caps[1]) * m1)


def truncation_budget(
    plan: ScalingPlan,
    mu: MeasureDescriptor,
    eps_trunc: float = 1e-5,
    rotate: bool = False,
    max_boxes: int = 2_000_000,
) -> TruncationReport:
    """Window half-width and edge caps keeping the discarded part below `eps_trunc`."""
    if not eps_trunc > 0:
        raise DomainError("truncation budget must be positive")
    law1, law2 = plan.law1, plan.law2
    m1, m2 = moment(law1, 1.0), moment(law2, 1.0)
    norm_mu = variation_bound(mu)
    scale = plan.lambda_rho * plan.rho ** 2 / plan.n_rho

    if norm_mu == 0.0:
        caps = (law1.u_min * _CAP_FLOOR, law2.u_min * _CAP_FLOOR)
    else:
        budget1 = eps_trunc / (4.0 * scale * norm_mu * m2)
        budget2 = eps_trunc / (4.0 * scale * norm_mu * m1)
        caps = (
            max(cap_for_tail_moment(law1, 1.0, budget1), _CAP_FLOOR * law1.u_min),
            max(cap_for_tail_moment(law2, 1.0, budget2), _CAP_FLOOR * law2.u_min),
        )

    support = mu.support_box()
    const, rate = mu.decay_bound
    if support is not None:
        half = max(abs(v) for v in support)
        window_mass = 0.0
    elif norm_mu == 0.0:
        half = 1.0
        window_mass = 0.0
    else:
        k = scale * m1 * m2
        half = max(math.log(16.0 * k * const / (rate * rate * eps_trunc)) / rate, 1.0 / rate)
        window_mass = k * const * (8.0 / (rate * rate)) * math.exp(-rate * half)

    count = _expected_count(plan, half, caps, rotate)
    limited = False
    if rotate:
        while count > max_boxes and (caps[0] > 2 * law1.u_min or caps[1] > 2 * law2.u_min):
            caps = (max(caps[0] / 2.0, law1.u_min * 2), max(caps[1] / 2.0, law2.u_min * 2))
            count = _expected_count(plan, half, caps, rotate)
            limited = True
    if count > max_boxes:
        raise BudgetError(
            f"expected {count:.3g} boxes per field exceeds the budget of {max_boxes}",
            required=count,
            budget=max_boxes,
        )
    report = TruncationReport(
        window_half=half,
        caps=caps,
        eps_trunc=eps_trunc,
        discarded_cap_mass=_cap_mass(plan, norm_mu, caps),
        discarded_window_mass=window_mass,
        expected_count=count,
        rotated=rotate,
        budget_limited=limited,
    )
    if limited:
        logger.warning("rotated caps limited by the box budget; discarded mass now %.3g", report.total)
    logger.debug("truncation: %s", report.describe())
    return report


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxField:
    """One realized Poisson sample. `edges` are already scaled by ρ."""

    centres: np.ndarray
    edges: np.ndarray
    angles: np.ndarray | None
    report: TruncationReport
    plan_token: str = ""

    @property
    def count(self) -> int:
        return int(self.centres.shape[0])

    @property
    def window(self) -> tuple[float, float, float, float]:
        half = self.report.window_half
        return -half, -half, half, half


def _component_edges(law: EdgeLaw, power: int, cap: float, rng: np.random.Generator, size: int) -> np.ndarray:
    if power == 0:
        return sample_edge(law, rng, size=size, cap=cap)
    return sample_size_biased(law, power, cap, rng, size)


def sample_box_field(
    plan: ScalingPlan,
    mu: MeasureDescriptor,
    rng: np.random.Generator,
    *,
    rotate: bool = False,
    eps_trunc: float = 1e-5,
    max_boxes: int = 2_000_000,
    report: TruncationReport | None = None,
) -> BoxField:
    """Draw the boxes whose bounding region meets the window, component by component."""
    if report is None:
        report = truncation_budget(plan, mu, eps_trunc, rotate=rotate, max_boxes=max_boxes)
    elif report.rotated != rotate:
        raise ContractError("truncation report was computed for a different rotation mode")
    law1, law2 = plan.law1, plan.law2
    half, caps, rho = report.window_half, report.caps, plan.rho

    centres, edges = [], []
    for coef, a, b in _mixture_terms(half, rho, rotate):
        mean = plan.lambda_rho * coef * partial_moment(law1, a, caps[0]) * partial_moment(law2, b, caps[1])
        count = int(rng.poisson(mean))
        if count == 0:
            continue
        u1 = _component_edges(law1, a, caps[0], rng, count)
        u2 = _component_edges(law2, b, caps[1], rng, count)
        if rotate:
            reach = half + rho * (u1 + u2) / 2.0
            reach = np.stack([reach, reach], axis=1)
        else:
            reach = np.stack([half + rho * u1 / 2.0, half + rho * u2 / 2.0], axis=1)
        centres.append(rng.uniform(-1.0, 1.0, size=(count, 2)) * reach)
        edges.append(rho * np.stack([u1, u2], axis=1))

    if centres:
        all_centres = np.concatenate(centres)
        all_edges = np.concatenate(edges)
    else:
        all_centres = np.zeros((0, 2))
        all_edges = np.zeros((0, 2))
    angles = rng.uniform(0.0, math.pi, size=all_centres.shape[0]) if rotate else None
    return BoxField(all_centres, all_edges, angles, report, plan.token)


def superpose(fields: list[BoxField], plan: ScalingPlan) -> BoxField:
    """Union of fields drawn under split_plan(plan, k), relabelled for `plan`."""
    if not fields:
        raise DomainError("nothing to superpose")
    expected = {p.token for p in split_plan(plan, len(fields))}
    first = fields[0].report
    for f in fields:
        if f.plan_token not in expected:
            raise ContractError("field was not drawn under a split of this plan")
        if (f.report.window_half, f.report.caps, f.report.rotated) != (first.window_half, first.caps, first.rotated):
            raise ContractError("superposed fields must share window and caps")
    angles = None
    if first.rotated:
        angles = np.concatenate([f.angles for f in fields])
    merged_report = replace(first, expected_count=sum(f.report.expected_count for f in fields))
    return BoxField(
        np.concatenate([f.centres for f in fields]),
        np.concatenate([f.edges for f in fields]),
        angles,
        merged_report,
        plan.token,
    )


def evaluate_centred(field: BoxField, mu: MeasureDescriptor, plan: ScalingPlan) -> float:
    """(Σ_j μ(B_j) − E[Σ_j μ(B_j); u ≤ caps]) / n_ρ."""
    if field.plan_token != plan.token:
        raise ContractError(f"field was drawn under plan {field.plan_token}, not {plan.token}")
    if field.count == 0:
        raw = 0.0
    elif field.angles is None:
        raw = float(np.sum(mu.box_mass_xy(field.centres[:, 0], field.centres[:, 1],
                                          field.edges[:, 0], field.edges[:, 1])))
    else:
        if any(not k.continuous for _, p in mu.terms for k in p.kernels):
            raise UnsupportedOperationError("rotated fields cannot be evaluated against indicator kernels")
        parts = []
        for start in range(0, field.count, 2048):
            sl = slice(start, start + 2048)
            parts.append(np.atleast_1d(rotated_box_mass(mu, field.centres[sl], field.edges[sl], field.angles[sl])))
        raw = float(np.sum(np.concatenate(parts)))
    return (raw - plan.centring(mu, field.report.caps)) / plan.n_rho


# ---------------------------------------------------------------------------
# Monte-Carlo driver
# ---------------------------------------------------------------------------

def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for replicate `index`, independent of how replicates are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def simulate_normalized(
    plan: ScalingPlan,
    mu: MeasureDescriptor,
    replicates: int,
    seed: int,
    *,
    threads: int = 1,
    rotate: bool = False,
    eps_trunc: float = 1e-5,
    max_boxes: int = 2_000_000,
    chunk: int = 256,
    report: TruncationReport | None = None,
) -> np.ndarray:
    """`replicates` i.i.d. draws of the centred normalized functional."""
    if replicates < 1:
        raise DomainError("replicate count must be at least 1")
    if report is None:
        report = truncation_budget(plan, mu, eps_trunc, rotate=rotate, max_boxes=max_boxes)
    out = np.empty(replicates)

    def run_chunk(start: int) -> None:
        for j in range(start, min(start + chunk, replicates)):
            field = sample_box_field(plan, mu, replicate_rng(seed, j), rotate=rotate, report=report)
            out[j] = evaluate_centred(field, mu, plan)

    starts = list(range(0, replicates, chunk))
    if threads <= 1 or len(starts) == 1:
        for start in starts:
            run_chunk(start)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for future in [pool.submit(run_chunk, s) for s in starts]:
                future.result()
    logger.debug("simulated %d replicates (%d threads, %.3g boxes/field expected)",
                 replicates, threads, report.expected_count)
    return out
