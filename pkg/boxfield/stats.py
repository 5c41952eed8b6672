"""
Empirical characteristic functions, CF/KS distances and the edge-integral
asymptotic checks.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats as sp_stats

from boxfield.errors import DomainError
from boxfield.quadrature import integrate_power_weighted
from boxfield.tails import edge_law

logger = logging.getLogger(__name__)

KS_COEF_1PCT = 1.628


def _samples(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("empty sample")
    return arr


def empirical_cf(samples, t):
    """(1/N)·Σ exp(i·t·X_j) for scalar or array t."""
    x = _samples(samples)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.size, dtype=complex)
    block = max(1, 4_000_000 // x.size)
    for start in range(0, t_arr.size, block):
        phase = np.outer(t_arr[start:start + block], x)
        out[start:start + block] = np.cos(phase).mean(axis=1) + 1j * np.sin(phase).mean(axis=1)
    return out[0] if np.ndim(t) == 0 else out.reshape(np.shape(t))


def robust_scale(samples) -> float:
    """IQR/1.349, falling back to the standard deviation, then 1."""
    x = _samples(samples)
    spread = float(sp_stats.iqr(x)) / 1.349
    if spread > 0 and math.isfinite(spread):
        return spread
    sd = float(np.std(x))
    return sd if sd > 0 and math.isfinite(sd) else 1.0


def default_t_grid(samples, points: int = 41, span: float = 5.0) -> np.ndarray:
    scale = robust_scale(samples)
    return np.linspace(-span / scale, span / scale, points)


def parse_t_grid(text: str) -> np.ndarray:
    """`lo:hi:n` → n evenly spaced points."""
    match = re.fullmatch(r"\s*([^:]+):([^:]+):(\d+)\s*", text)
    if not match:
        raise DomainError(f"t-grid must look like lo:hi:n (got {text!r})")
    lo, hi, n = float(match.group(1)), float(match.group(2)), int(match.group(3))
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(f"invalid t-grid {text!r}")
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# CF distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CfComparison:
    t_grid: np.ndarray
    empirical: np.ndarray
    reference: np.ndarray
    gaps: np.ndarray
    max_abs_gap: float
    mc_band: float
    threshold: float
    passed_per_t: np.ndarray
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.passed_per_t.all())

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def describe(self) -> dict:
        return {
            "verdict": self.verdict,
            "samples": self.samples,
            "max_abs_gap": self.max_abs_gap,
            "mc_band": self.mc_band,
            "threshold": self.threshold,
            "t": self.t_grid.tolist(),
            "empirical": [[z.real, z.imag] for z in self.empirical],
            "reference": [[z.real, z.imag] for z in self.reference],
            "gaps": self.gaps.tolist(),
            "pass": self.passed_per_t.tolist(),
        }


def _reference_values(reference, t_grid: np.ndarray) -> np.ndarray:
    if hasattr(reference, "cf"):
        return np.asarray(reference.cf(t_grid), dtype=complex)
    if callable(reference):
        return np.array([reference(float(t)) for t in t_grid], dtype=complex)
    values = np.asarray(reference, dtype=complex)
    if values.shape != t_grid.shape:
        raise DomainError("reference values must match the t-grid")
    return values


def cf_distance(
    samples,
    reference,
    t_grid=None,
    *,
    band_factor: float = 2.0,
    quad_tol: float = 0.0,
    trunc_budget: float = 0.0,
) -> CfComparison:
    """Compare the empirical CF with a LimitLaw, a CF callable or precomputed values.

    Passes iff every gap is within band_factor/√N + quad_tol + trunc_budget.
    """
    x = _samples(samples)
    grid = default_t_grid(x) if t_grid is None else np.asarray(t_grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise DomainError("t-grid must be finite")
    emp = empirical_cf(x, grid)
    ref = _reference_values(reference, grid)
    gaps = np.abs(emp - ref)
    band = band_factor / math.sqrt(x.size)
    threshold = band + quad_tol + trunc_budget
    result = CfComparison(
        t_grid=grid, empirical=emp, reference=ref, gaps=gaps,
        max_abs_gap=float(gaps.max()) if gaps.size else 0.0,
        mc_band=band, threshold=threshold, passed_per_t=gaps <= threshold, samples=int(x.size),
    )
    logger.info("CF distance: max gap %.4g vs threshold %.4g → %s", result.max_abs_gap, threshold, result.verdict)
    return result


# ---------------------------------------------------------------------------
# Kolmogorov–Smirnov
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float
    pvalue: float
    n: int
    m: int | None

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical

    def describe(self) -> dict:
        return {"statistic": self.statistic, "critical_1pct": self.critical, "pvalue": self.pvalue,
                "n": self.n, "m": self.m, "passed": self.passed}


def ks_distance(samples, reference) -> KsResult:
    """One-sample KS against a CDF callable, two-sample KS against another sample."""
    x = _samples(samples)
    if callable(reference):
        res = sp_stats.ks_1samp(x, reference)
        return KsResult(float(res.statistic), KS_COEF_1PCT / math.sqrt(x.size), float(res.pvalue), x.size, None)
    y = _samples(reference)
    res = sp_stats.ks_2samp(x, y)
    critical = KS_COEF_1PCT * math.sqrt((x.size + y.size) / (x.size * y.size))
    return KsResult(float(res.statistic), critical, float(res.pvalue), x.size, y.size)


# ---------------------------------------------------------------------------
# Edge-integral asymptotics
# ---------------------------------------------------------------------------

def min_power(u):
    return np.minimum(u, u * u)


@dataclass(frozen=True)
class LemmaReport:
    rhos: np.ndarray
    ratios: np.ndarray
    zero_integrand: bool = False

    @property
    def monotone(self) -> bool:
        """Ratios move towards 1 as ρ decreases."""
        order = np.argsort(-self.rhos)
        dist = np.abs(1.0 - self.ratios[order])
        return bool(np.all(np.diff(dist) <= 1e-9))

    def describe(self) -> dict:
        return {"rho": self.rhos.tolist(), "ratio": self.ratios.tolist(),
                "zero_integrand": self.zero_integrand, "monotone": self.monotone}


def _edge_integral(g: Callable, law, rho: float, tol: float) -> float:
    """∫ g(ρu) f(u) du / ρ^γ = tail const·∫_{ρ·u_min}^∞ g(e)·e^{−γ−1} de."""
    return law.tail_constant * integrate_power_weighted(g, law.gamma, lo=rho * law.u_min, tol=tol)


def lemma_ratio_check(
    g_axes=(min_power, min_power),
    gamma1: float = 1.3,
    gamma2: float = 1.6,
    rhos=(1e-1, 1e-2, 1e-3, 1e-4),
    *,
    umin1: float | None = None,
    umin2: float | None = None,
    tol: float = 1e-9,
) -> LemmaReport:
    """∫g dF_ρ / (ρ^{γ₁+γ₂}·∫g·u₁^{−γ₁−1}u₂^{−γ₂−1} du) for a product test function g = g₁⊗g₂."""
    laws = (edge_law(gamma1, umin1), edge_law(gamma2, umin2))
    rhos_arr = np.asarray(rhos, dtype=float)
    limit = 1.0
    for g, law in zip(g_axes, laws):
        limit *= integrate_power_weighted(g, law.gamma, tol=tol)
    if limit == 0.0:
        logger.info("test function integrates to zero; ratios reported as 1")
        return LemmaReport(rhos_arr, np.ones_like(rhos_arr), zero_integrand=True)
    ratios = []
    for rho in rhos_arr:
        value = 1.0
        for g, law in zip(g_axes, laws):
            value *= _edge_integral(g, law, float(rho), tol)
        ratios.append(value / limit)
    report = LemmaReport(rhos_arr, np.asarray(ratios))
    logger.debug("edge-integral ratios: %s", report.describe())
    return report


def truncated_min_power_family(rho: float):
    """g_ρ = min(u₁,u₁²)·(1 − u₁/√ρ)₊ ⊗ min(u₂,u₂²), whose scaled integral vanishes as ρ → 0."""
    edge = math.sqrt(rho)
    return (lambda u: min_power(u) * max(0.0, 1.0 - u / edge), min_power)


def vanishing_integral_check(
    g_family=truncated_min_power_family,
    gamma1: float = 1.3,
    gamma2: float = 1.6,
    rhos=(1e-1, 1e-2, 1e-3, 1e-4),
    *,
    umin1: float | None = None,
    umin2: float | None = None,
    tol: float = 1e-9,
) -> np.ndarray:
    """∫ g_ρ dF_ρ / ρ^{γ₁+γ₂} along the ladder; tends to 0 for admissible families."""
    laws = (edge_law(gamma1, umin1), edge_law(gamma2, umin2))
    values = []
    for rho in rhos:
        value = 1.0
        for g, law in zip(g_family(float(rho)), laws):
            value *= _edge_integral(g, law, float(rho), tol)
        values.append(value)
    return np.asarray(values)


def median_of_means(x, groups: int = 10) -> float:
    arr = _samples(x)
    groups = max(1, min(groups, arr.size))
    return float(np.median([part.mean() for part in np.array_split(arr, groups)]))
