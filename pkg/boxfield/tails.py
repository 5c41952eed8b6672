"""
Heavy-tailed edge-length laws and the constants of the stable limit.

Edges follow exact Pareto laws

    f(u) = γ·u_min^γ / u^{γ+1}   on [u_min, ∞)

The unit-tail member uses u_min = γ^{-1/γ}, so f(u) = u^{-(γ+1)} on its
support: the tail constant is exactly 1 and f(u) ≤ u^{-(γ+1)} for every u > 0
(the density vanishes below u_min).

Sampling is by inverse CDF. The sampler in `process` also needs size-biased
and capped variants (density ∝ u^k f(u) on [u_min, cap]); those live here so
every closed-form moment used for centring sits next to the law it belongs to.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gamma as gamma_fn

from boxfield.errors import DivergentMomentError, DomainError

logger = logging.getLogger(__name__)


class EdgeLawKind(str, Enum):
    PARETO_UNIT_TAIL = "pareto_unit_tail"
    PARETO_GENERAL = "pareto_general"


@dataclass(frozen=True)
class EdgeLaw:
    """Pareto edge-length law with tail index `gamma` and support [u_min, ∞)."""

    gamma: float
    u_min: float
    kind: EdgeLawKind = EdgeLawKind.PARETO_GENERAL

    @property
    def tail_constant(self) -> float:
        """γ·u_min^γ; equals 1 for the unit-tail law."""
        return self.gamma * self.u_min ** self.gamma

    def density(self, u):
        u = np.asarray(u, dtype=float)
        safe = np.maximum(u, self.u_min)
        out = np.where(u >= self.u_min, self.tail_constant / safe ** (self.gamma + 1.0), 0.0)
        return out[()]

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        safe = np.maximum(u, self.u_min)
        out = np.where(u >= self.u_min, -np.expm1(self.gamma * np.log(self.u_min / safe)), 0.0)
        return out[()]

    def survival(self, u):
        u = np.asarray(u, dtype=float)
        safe = np.maximum(u, self.u_min)
        out = np.where(u >= self.u_min, (self.u_min / safe) ** self.gamma, 1.0)
        return out[()]

    def ppf(self, q):
        """Inverse CDF; q = 0 maps to u_min."""
        q = np.asarray(q, dtype=float)
        out = self.u_min * np.exp(-np.log1p(-q) / self.gamma)
        return out[()]

    def describe(self) -> dict:
        return {"kind": self.kind.value, "gamma": self.gamma, "u_min": self.u_min}


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def make_pareto_unit_tail(gamma: float) -> EdgeLaw:
    """Pareto law whose density is exactly u^{-(γ+1)} on its support."""
    if not gamma > 1.0:
        raise DomainError(f"tail index must exceed 1 so the mean edge length is finite (got γ={gamma})")
    return EdgeLaw(gamma=float(gamma), u_min=gamma ** (-1.0 / gamma), kind=EdgeLawKind.PARETO_UNIT_TAIL)


def make_pareto(gamma: float, u_min: float) -> EdgeLaw:
    if not gamma > 1.0:
        raise DomainError(f"tail index must exceed 1 so the mean edge length is finite (got γ={gamma})")
    if not u_min > 0.0:
        raise DomainError(f"u_min must be positive (got {u_min})")
    return EdgeLaw(gamma=float(gamma), u_min=float(u_min), kind=EdgeLawKind.PARETO_GENERAL)


def edge_law(gamma: float, u_min: float | None = None) -> EdgeLaw:
    """Unit-tail law unless an explicit u_min overrides it."""
    if u_min is None:
        return make_pareto_unit_tail(gamma)
    return make_pareto(gamma, u_min)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_edge(law: EdgeLaw, rng: np.random.Generator, size=None, cap: float | None = None):
    """Inverse-CDF draws u = u_min·(1−U)^{-1/γ}, optionally conditioned on u ≤ cap."""
    uniform = rng.random(size)
    if cap is not None and math.isfinite(cap):
        uniform = uniform * law.cdf(cap)
    return law.ppf(uniform)


def sample_size_biased(law: EdgeLaw, k: int, cap: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws from the density ∝ u^k·f(u) on [u_min, cap].

    The exponent p = k − γ decides the shape: p < 0 is a (capped) Pareto law
    with index γ − k, p = 0 is log-uniform and p > 0 needs a finite cap.
    """
    p = k - law.gamma
    span = math.log(cap / law.u_min) if math.isfinite(cap) else math.inf
    if p >= 0 and not math.isfinite(span):
        raise DomainError(f"size bias of order {k} needs a finite cap for γ={law.gamma}")
    uniform = rng.random(size)
    if math.isfinite(span) and abs(p * span) < 1e-10:
        return law.u_min * np.exp(uniform * span)
    scale = math.expm1(p * span) if math.isfinite(span) else -1.0
    return law.u_min * np.exp(np.log1p(uniform * scale) / p)


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

def moment(law: EdgeLaw, p: float) -> float:
    """E[u^p] = γ·u_min^p/(γ−p) for p < γ."""
    if p >= law.gamma:
        raise DivergentMomentError(f"moment of order {p} diverges for tail index γ={law.gamma}")
    return law.gamma * law.u_min ** p / (law.gamma - p)


def partial_moment(law: EdgeLaw, p: float, cap: float) -> float:
    """E[u^p; u ≤ cap]."""
    if cap <= law.u_min:
        return 0.0
    if not math.isfinite(cap):
        return moment(law, p)
    span = math.log(cap / law.u_min)
    q = p - law.gamma
    if abs(q * span) < 1e-12:
        return law.gamma * law.u_min ** p * span
    return law.gamma * law.u_min ** p * math.expm1(q * span) / q


def tail_moment(law: EdgeLaw, p: float, cap: float) -> float:
    """E[u^p; u > cap] for p < γ."""
    if p >= law.gamma:
        raise DivergentMomentError(f"tail moment of order {p} diverges for tail index γ={law.gamma}")
    if not math.isfinite(cap):
        return 0.0
    if cap <= law.u_min:
        return moment(law, p)
    return law.tail_constant * cap ** (p - law.gamma) / (law.gamma - p)


def cap_for_tail_moment(law: EdgeLaw, p: float, budget: float) -> float:
    """Smallest cap ≥ u_min with E[u^p; u > cap] ≤ budget (closed form)."""
    if budget <= 0:
        return math.inf
    if budget >= moment(law, p):
        return law.u_min
    base = budget * (law.gamma - p) / law.tail_constant
    return max(law.u_min, base ** (1.0 / (p - law.gamma)))


# ---------------------------------------------------------------------------
# Stable-limit constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitConstants:
    """Constants entering the points-regime normalizer and the moment-based ones."""

    c2: float
    c_gamma1: float
    c_gamma1_gamma2: float
    d_gamma1: complex
    m1: float
    m2: float
    v1: float | None = None
    v2: float | None = None

    def describe(self) -> dict:
        return {
            "c2": self.c2,
            "c_gamma1": self.c_gamma1,
            "c_gamma1_gamma2": self.c_gamma1_gamma2,
            "d_gamma1": [self.d_gamma1.real, self.d_gamma1.imag],
            "m1": self.m1,
            "m2": self.m2,
            "v1": self.v1,
            "v2": self.v2,
        }


def d_constant(gamma1: float) -> complex:
    """∫₀^∞ (e^{iu} − 1 − iu)·u^{−γ₁−1} du in closed form, 1 < γ₁ < 2."""
    if not 1.0 < gamma1 < 2.0:
        raise DomainError(f"d constant needs 1 < γ₁ < 2 (got {gamma1})")
    half_angle = math.pi * gamma1 / 2.0
    real = gamma_fn(2.0 - gamma1) / (gamma1 * (gamma1 - 1.0)) * math.cos(half_angle)
    return complex(real, -real * math.tan(half_angle))


def limit_constants(gamma1: float, gamma2: float, law2: EdgeLaw, law1: EdgeLaw | None = None) -> LimitConstants:
    """c₂, c_{γ₁}, c_{γ₁,γ₂}, d_{γ₁} and the first/second edge moments."""
    if not 1.0 < gamma1 < 2.0:
        raise DomainError(f"limit constants need 1 < γ₁ < 2 (got γ₁={gamma1})")
    if not gamma1 < gamma2:
        raise DomainError(f"limit constants need γ₁ < γ₂ (got γ₁={gamma1}, γ₂={gamma2})")
    if not math.isclose(law2.gamma, gamma2, rel_tol=1e-12):
        raise DomainError(f"width law has γ={law2.gamma}, expected γ₂={gamma2}")
    law1 = law1 or make_pareto_unit_tail(gamma1)
    d = d_constant(gamma1)
    c2 = moment(law2, gamma1) ** (1.0 / gamma1)
    c_gamma1 = (-d.real) ** (1.0 / gamma1)
    constants = LimitConstants(
        c2=c2,
        c_gamma1=c_gamma1,
        c_gamma1_gamma2=c_gamma1 * c2,
        d_gamma1=d,
        m1=moment(law1, 1.0),
        m2=moment(law2, 1.0),
        v1=moment(law1, 2.0) if law1.gamma > 2.0 else None,
        v2=moment(law2, 2.0) if law2.gamma > 2.0 else None,
    )
    logger.debug("limit constants γ₁=%s γ₂=%s: %s", gamma1, gamma2, constants)
    return constants
