"""
Signed test measures with closed-form box masses.

Every built-in measure is a finite linear combination of product primitives

    f(x) = A · k₁(x₁) · k₂(x₂)

whose one-dimensional kernels have closed-form antiderivatives:

    laplace     exp(−|y − s| / ℓ)          (decay rate c = 1/ℓ)
    gauss       exp(−(y − s)² / (2w²))
    indicator   1{|y − s| ≤ h}

so the mass of any axis-aligned box is a sum of products of 1-D interval
masses. Dilation, translation and scaling act on (A, s, ℓ) directly, which
keeps every family closed under those operations.

Measure mini-language (CLI and config files):

    laplace:C=1,c=1[,c1=..,c2=..,x=..,y=..]
    gauss:A=1,w=1[,w1=..,w2=..,x=..,y=..]
    box:x0,y0,x1,y1[,A=..]
    combo:1.0*laplace:c=1;-0.5*box:0,0,1,1
    zero
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from boxfield.errors import (
    DomainError,
    MembershipError,
    UndefinedSkewnessError,
    UnsupportedOperationError,
)

logger = logging.getLogger(__name__)

M2 = "M2"
M_HIGH = "M_high"
M_L = "M_L"
M_P = "M_P"
ALL_SPACES = frozenset({M2, M_HIGH, M_L, M_P})

# Multiples of the kernel scale used to place quadrature breakpoints.
_GRADING = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0)
# Beyond this many scales a smooth kernel is below e^-40.
_REACH = 50.0


class KernelKind(str, Enum):
    LAPLACE = "laplace"
    GAUSS = "gauss"
    INDICATOR = "indicator"


class Family(str, Enum):
    LAPLACE_PRODUCT = "laplace_product"
    GAUSSIAN_PRODUCT = "gaussian_product"
    BOX_INDICATOR = "box_indicator"
    LINEAR_COMBINATION = "linear_combination"


_FAMILY_OF_KIND = {
    KernelKind.LAPLACE: Family.LAPLACE_PRODUCT,
    KernelKind.GAUSS: Family.GAUSSIAN_PRODUCT,
    KernelKind.INDICATOR: Family.BOX_INDICATOR,
}


@lru_cache(maxsize=64)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def panel_rule(breaks, order: int = 12, split: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss–Legendre nodes/weights over consecutive `breaks`."""
    edges = np.unique(np.asarray(breaks, dtype=float))
    if split > 1:
        fine = [np.linspace(a, b, split + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
        edges = np.concatenate(fine + [edges[-1:]])
    nodes, weights = _leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = (hi - lo) / 2.0
    xs = (lo + hi) / 2.0 + half * nodes[None, :]
    ws = half * weights[None, :]
    return xs.ravel(), ws.ravel()


# ---------------------------------------------------------------------------
# One-dimensional kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """One axis factor of a product primitive. `scale` is ℓ, w or h by kind."""

    kind: KernelKind
    center: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"{self.kind.value} kernel needs a positive scale (got {self.scale})")

    def value(self, y):
        z = (np.asarray(y, dtype=float) - self.center) / self.scale
        if self.kind is KernelKind.LAPLACE:
            return np.exp(-np.abs(z))
        if self.kind is KernelKind.GAUSS:
            return np.exp(-0.5 * z * z)
        return (np.abs(z) <= 1.0).astype(float)

    def interval(self, a, b):
        """∫_a^b k(y) dy for a ≤ b, vectorized."""
        za = (np.asarray(a, dtype=float) - self.center) / self.scale
        zb = (np.asarray(b, dtype=float) - self.center) / self.scale
        if self.kind is KernelKind.LAPLACE:
            left = np.exp(np.minimum(zb, 0.0)) * -np.expm1(np.minimum(za, zb) - np.minimum(zb, 0.0))
            right = np.exp(-np.maximum(za, 0.0)) * -np.expm1(np.maximum(za, 0.0) - np.maximum(zb, za))
            mixed = 2.0 - np.exp(np.minimum(za, 0.0)) - np.exp(-np.maximum(zb, 0.0))
            out = np.where(zb <= 0.0, left, np.where(za >= 0.0, right, mixed))
            return self.scale * out
        if self.kind is KernelKind.GAUSS:
            upper = np.where(za > 0.0, ndtr(-za) - ndtr(-zb), ndtr(zb) - ndtr(za))
            return self.scale * math.sqrt(2.0 * math.pi) * upper
        return self.scale * np.maximum(np.minimum(zb, 1.0) - np.maximum(za, -1.0), 0.0)

    def centered(self, x, u):
        """Mass of [x − u/2, x + u/2]."""
        x = np.asarray(x, dtype=float)
        half = np.asarray(u, dtype=float) / 2.0
        return self.interval(x - half, x + half)

    @property
    def mass(self) -> float:
        return self.power_integral(1.0)

    def power_integral(self, p: float) -> float:
        """∫ k(y)^p dy."""
        if self.kind is KernelKind.LAPLACE:
            return 2.0 * self.scale / p
        if self.kind is KernelKind.GAUSS:
            return self.scale * math.sqrt(2.0 * math.pi / p)
        return 2.0 * self.scale

    @property
    def continuous(self) -> bool:
        return self.kind is not KernelKind.INDICATOR

    @property
    def natural_rate(self) -> float:
        """Largest c for which k(y) ≤ const·e^{−c|y−s|}; indicators decay arbitrarily fast."""
        if self.kind is KernelKind.LAPLACE:
            return 1.0 / self.scale
        if self.kind is KernelKind.GAUSS:
            return 1.0 / self.scale ** 2
        return math.inf

    def envelope_constant(self, rate: float) -> float:
        """C with k(y) ≤ C·e^{−rate·|y|}, valid for rate ≤ natural_rate."""
        if self.kind is KernelKind.LAPLACE:
            return math.exp(rate * abs(self.center))
        if self.kind is KernelKind.GAUSS:
            # tangent majorant of the Gaussian exponent at unit distance
            return math.exp(1.0 / (2.0 * self.scale ** 2) + rate * abs(self.center))
        return math.exp(rate * (abs(self.center) + self.scale))

    def support(self) -> tuple[float, float]:
        """Interval outside which the kernel is zero or negligible."""
        reach = self.scale if self.kind is KernelKind.INDICATOR else _REACH * self.scale
        return self.center - reach, self.center + reach

    def breakpoints(self) -> list[float]:
        if self.kind is KernelKind.INDICATOR:
            return [self.center - self.scale, self.center + self.scale]
        pts = [self.center]
        for g in _GRADING:
            pts += [self.center - g * self.scale, self.center + g * self.scale]
        return pts

    def overlap(self, other: "Kernel") -> float:
        """∫ k(y)·k'(y) dy."""
        if self == other:
            return self.power_integral(2.0)
        lo = max(self.support()[0], other.support()[0])
        hi = min(self.support()[1], other.support()[1])
        if lo >= hi:
            return 0.0
        pts = sorted(p for p in self.breakpoints() + other.breakpoints() if lo < p < hi)
        xs, ws = panel_rule([lo] + pts + [hi], order=16)
        return float(np.dot(ws, self.value(xs) * other.value(xs)))

    def dilate(self, a: float) -> "Kernel":
        return Kernel(self.kind, self.center * a, self.scale * a)

    def shift(self, s: float) -> "Kernel":
        return Kernel(self.kind, self.center + s, self.scale)


def pair_axis_integral(k_a: Kernel, k_b: Kernel, u: float) -> float:
    """∫ k_a([x ± u/2])·k_b([x ± u/2]) dx, the axis factor of φ and of box-mass covariances."""
    lo = min(k_a.support()[0], k_b.support()[0]) - u / 2.0
    hi = max(k_a.support()[1], k_b.support()[1]) + u / 2.0
    pts = set()
    for p in k_a.breakpoints() + k_b.breakpoints():
        pts.update((p - u / 2.0, p + u / 2.0))
    inner = sorted(p for p in pts if lo < p < hi)
    xs, ws = panel_rule([lo] + inner + [hi], order=16)
    return float(np.dot(ws, k_a.centered(xs, u) * k_b.centered(xs, u)))


# ---------------------------------------------------------------------------
# Primitives and descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Primitive:
    amplitude: float
    k1: Kernel
    k2: Kernel

    @property
    def kernels(self) -> tuple[Kernel, Kernel]:
        return self.k1, self.k2

    @property
    def family(self) -> Family:
        if self.k1.kind is self.k2.kind:
            return _FAMILY_OF_KIND[self.k1.kind]
        return Family.LINEAR_COMBINATION

    @property
    def mass(self) -> float:
        return self.amplitude * self.k1.mass * self.k2.mass


@dataclass(frozen=True)
class StableParams:
    sigma: float
    beta: float


@dataclass(frozen=True)
class Certificate:
    constant: float
    alpha: tuple[float, float]
    max_ratio: float
    samples: int
    passed: bool


@dataclass(frozen=True)
class MeasureDescriptor:
    """A signed measure: Σ weight · primitive. The empty sum is the zero measure."""

    terms: tuple[tuple[float, Primitive], ...] = field(default_factory=tuple)

    @property
    def is_zero(self) -> bool:
        return all(w * p.amplitude == 0.0 for w, p in self.terms)

    @property
    def family(self) -> Family:
        if len(self.terms) == 1:
            return self.terms[0][1].family
        return Family.LINEAR_COMBINATION

    @property
    def params(self) -> dict:
        return measure_to_dict(self)

    @property
    def is_product(self) -> bool:
        return len(self.terms) == 1

    @property
    def decay_bound(self) -> tuple[float, float]:
        """(C_μ, c_μ) with |f_μ(x)| ≤ C_μ·exp(−c_μ(|x₁|+|x₂|))."""
        if not self.terms:
            return 0.0, 1.0
        rates = [k.natural_rate for _, p in self.terms for k in p.kernels]
        finite = [r for r in rates if math.isfinite(r)]
        rate = min(finite) if finite else 1.0
        const = sum(
            abs(w * p.amplitude) * p.k1.envelope_constant(rate) * p.k2.envelope_constant(rate)
            for w, p in self.terms
        )
        return const, rate

    @property
    def alpha_exponents(self) -> tuple[float, float]:
        return 2.0, 2.0

    @property
    def membership(self) -> frozenset[str]:
        spaces = set(ALL_SPACES)
        for _, p in self.terms:
            if not (p.k1.continuous and p.k2.continuous):
                spaces.discard(M_P)
        return frozenset(spaces)

    def support_box(self) -> tuple[float, float, float, float] | None:
        """Exact support rectangle when every kernel is an indicator, else None."""
        if not self.terms or any(k.continuous for _, p in self.terms for k in p.kernels):
            return None
        x_lo = min(p.k1.support()[0] for _, p in self.terms)
        x_hi = max(p.k1.support()[1] for _, p in self.terms)
        y_lo = min(p.k2.support()[0] for _, p in self.terms)
        y_hi = max(p.k2.support()[1] for _, p in self.terms)
        return x_lo, y_lo, x_hi, y_hi

    def extent(self) -> float:
        """Half-width of a centred square holding all but e^{-40} of the mass."""
        if not self.terms:
            return 1.0
        return max(max(abs(v) for v in k.support()) for _, p in self.terms for k in p.kernels)

    def density(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        for w, p in self.terms:
            out = out + w * p.amplitude * p.k1.value(x1) * p.k2.value(x2)
        return out

    def box_mass_xy(self, x1, x2, u1, u2):
        """μ(B(x,u)) for broadcastable coordinate arrays (no validation)."""
        out = 0.0
        for w, p in self.terms:
            out = out + w * p.amplitude * p.k1.centered(x1, u1) * p.k2.centered(x2, u2)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x1, x2, u1, u2).shape)

    def line_mass_xy(self, x1, x2, u1):
        out = 0.0
        for w, p in self.terms:
            out = out + w * p.amplitude * p.k1.centered(x1, u1) * p.k2.value(x2)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x1, x2, u1).shape)

    def planar_rule(self, order: int = 12, split: int = 2):
        """Tensor Gauss–Legendre rule fitted to the kernels' breakpoints."""
        axes = []
        for axis in (0, 1):
            kernels = [p.kernels[axis] for _, p in self.terms]
            lo = min(k.support()[0] for k in kernels)
            hi = max(k.support()[1] for k in kernels)
            pts = [lo, hi] + [b for k in kernels for b in k.breakpoints() if lo <= b <= hi]
            axes.append(panel_rule(pts, order=order, split=split))
        return axes


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def _single(amplitude: float, k1: Kernel, k2: Kernel) -> MeasureDescriptor:
    return MeasureDescriptor(terms=((1.0, Primitive(float(amplitude), k1, k2)),))


def laplace_product(C: float = 1.0, c: float = 1.0, c1: float | None = None,
                    c2: float | None = None, x: float = 0.0, y: float = 0.0) -> MeasureDescriptor:
    """Density C·exp(−c₁|x₁ − x| − c₂|x₂ − y|)."""
    c1 = c if c1 is None else c1
    c2 = c if c2 is None else c2
    if c1 <= 0 or c2 <= 0:
        raise DomainError("laplace decay rates must be positive")
    return _single(C, Kernel(KernelKind.LAPLACE, x, 1.0 / c1), Kernel(KernelKind.LAPLACE, y, 1.0 / c2))


def gaussian_product(A: float = 1.0, w: float = 1.0, w1: float | None = None,
                     w2: float | None = None, x: float = 0.0, y: float = 0.0) -> MeasureDescriptor:
    w1 = w if w1 is None else w1
    w2 = w if w2 is None else w2
    return _single(A, Kernel(KernelKind.GAUSS, x, w1), Kernel(KernelKind.GAUSS, y, w2))


def box_indicator(x0: float, y0: float, x1: float, y1: float, A: float = 1.0) -> MeasureDescriptor:
    """A times Lebesgue measure restricted to [x0,x1]×[y0,y1]."""
    if not (x1 > x0 and y1 > y0):
        raise DomainError(f"box corners must satisfy x0 < x1, y0 < y1 (got {x0},{y0},{x1},{y1})")
    return _single(
        A,
        Kernel(KernelKind.INDICATOR, (x0 + x1) / 2.0, (x1 - x0) / 2.0),
        Kernel(KernelKind.INDICATOR, (y0 + y1) / 2.0, (y1 - y0) / 2.0),
    )


def zero_measure() -> MeasureDescriptor:
    return MeasureDescriptor(terms=())


def combine(*parts: tuple[float, MeasureDescriptor]) -> MeasureDescriptor:
    """Σ weight·μ, flattened into one descriptor."""
    terms = []
    for weight, mu in parts:
        terms.extend((weight * w, p) for w, p in mu.terms)
    return MeasureDescriptor(terms=tuple(terms))


# ---------------------------------------------------------------------------
# Evaluations
# ---------------------------------------------------------------------------

def _as_pair(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape[-1:] != (2,):
        raise DomainError(f"{name} must have a trailing dimension of 2 (got shape {arr.shape})")
    return arr


def box_mass(mu: MeasureDescriptor, x, u):
    """μ(B(x,u)) for the box centred at x with edges u; x, u shaped (..., 2)."""
    x = _as_pair(x, "x")
    u = _as_pair(u, "u")
    if np.any(u <= 0):
        raise DomainError("box edges must be positive")
    out = mu.box_mass_xy(x[..., 0], x[..., 1], u[..., 0], u[..., 1])
    return out[()] if out.ndim == 0 else out


def line_mass(mu: MeasureDescriptor, x, u1):
    """∫ f_μ(y₁, x₂) dy₁ over [x₁ − u₁/2, x₁ + u₁/2]."""
    if M_L not in mu.membership:
        raise UnsupportedOperationError("line mass needs a measure with a density")
    x = _as_pair(x, "x")
    u1 = np.asarray(u1, dtype=float)
    if np.any(u1 <= 0):
        raise DomainError("segment length must be positive")
    out = mu.line_mass_xy(x[..., 0], x[..., 1], u1)
    return out[()] if out.ndim == 0 else out


def rotated_box_mass(mu: MeasureDescriptor, x, u, theta, order: int = 8, panels: int = 4):
    """Mass of the box with edges u centred at x and rotated by θ.

    Tensor Gauss–Legendre over the rectangle's own coordinates; indicator
    kernels have no smooth restriction to a rotated box and are refused.
    """
    if any(not k.continuous for _, p in mu.terms for k in p.kernels):
        raise UnsupportedOperationError("rotated box mass is only available for continuous product kernels")
    x = np.atleast_2d(_as_pair(x, "x"))
    u = np.atleast_2d(_as_pair(u, "u"))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(u <= 0):
        raise DomainError("box edges must be positive")
    s, ws = panel_rule(np.linspace(-0.5, 0.5, panels + 1), order=order)
    s1 = s[None, :, None] * u[:, 0, None, None]
    s2 = s[None, None, :] * u[:, 1, None, None]
    cos_t = np.cos(theta)[:, None, None]
    sin_t = np.sin(theta)[:, None, None]
    y1 = x[:, 0, None, None] + cos_t * s1 - sin_t * s2
    y2 = x[:, 1, None, None] + sin_t * s1 + cos_t * s2
    vals = mu.density(y1, y2)
    out = np.einsum("bij,i,j->b", vals, ws, ws) * u[:, 0] * u[:, 1]
    return out[0] if out.shape == (1,) else out


def total_mass(mu: MeasureDescriptor) -> float:
    """μ(R²)."""
    return float(sum(w * p.mass for w, p in mu.terms))


def total_variation(mu: MeasureDescriptor) -> float:
    """‖μ‖ = ∫|f_μ|; closed form for a single primitive."""
    if not mu.terms:
        return 0.0
    if mu.is_product:
        w, p = mu.terms[0]
        return abs(w * p.amplitude) * p.k1.mass * p.k2.mass
    (x1, w1), (x2, w2) = mu.planar_rule()
    vals = np.abs(mu.density(x1[:, None], x2[None, :]))
    return float(w1 @ vals @ w2)


def variation_bound(mu: MeasureDescriptor) -> float:
    """Σ|w|·‖primitive‖, an upper bound for ‖μ‖ without quadrature."""
    return float(sum(abs(w * p.amplitude) * p.k1.mass * p.k2.mass for w, p in mu.terms))


def density_inner(mu: MeasureDescriptor, nu: MeasureDescriptor) -> float:
    """∫ f_μ·f_ν, separable per pair of primitives."""
    total = 0.0
    for w_a, p_a in mu.terms:
        for w_b, p_b in nu.terms:
            total += (w_a * p_a.amplitude * w_b * p_b.amplitude
                      * p_a.k1.overlap(p_b.k1) * p_a.k2.overlap(p_b.k2))
    return float(total)


def stable_params(mu: MeasureDescriptor, gamma1: float) -> StableParams:
    """σ_μ = ‖f_μ‖_{γ₁} and β_μ = (‖f⁺‖^{γ₁} − ‖f⁻‖^{γ₁}) / ‖f‖^{γ₁}."""
    if not 1.0 < gamma1 < 2.0:
        raise DomainError(f"stable parameters need 1 < γ₁ < 2 (got {gamma1})")
    if M_P not in mu.membership:
        raise MembershipError("stable parameters need a continuous density (box_indicator is not admitted)")
    if mu.is_zero:
        raise UndefinedSkewnessError("σ_μ = 0 for the zero measure, so β_μ is undefined")
    if mu.is_product:
        w, p = mu.terms[0]
        amp = w * p.amplitude
        power = abs(amp) ** gamma1 * p.k1.power_integral(gamma1) * p.k2.power_integral(gamma1)
        return StableParams(sigma=power ** (1.0 / gamma1), beta=math.copysign(1.0, amp))
    (x1, w1), (x2, w2) = mu.planar_rule(order=16, split=4)
    vals = mu.density(x1[:, None], x2[None, :])
    pos = float(w1 @ (np.maximum(vals, 0.0) ** gamma1) @ w2)
    neg = float(w1 @ (np.maximum(-vals, 0.0) ** gamma1) @ w2)
    if pos + neg <= 0.0:
        raise UndefinedSkewnessError("σ_μ = 0, so β_μ is undefined")
    return StableParams(sigma=(pos + neg) ** (1.0 / gamma1), beta=(pos - neg) / (pos + neg))


# ---------------------------------------------------------------------------
# Transformations
# ---------------------------------------------------------------------------

def dilate(mu: MeasureDescriptor, a: float) -> MeasureDescriptor:
    """μ_a(A) = μ(A/a): density y ↦ a⁻²·f_μ(y/a)."""
    if not a > 0:
        raise DomainError(f"dilation factor must be positive (got {a})")
    return MeasureDescriptor(terms=tuple(
        (w, Primitive(p.amplitude / (a * a), p.k1.dilate(a), p.k2.dilate(a))) for w, p in mu.terms
    ))


def translate(mu: MeasureDescriptor, s) -> MeasureDescriptor:
    s1, s2 = (float(v) for v in s)
    return MeasureDescriptor(terms=tuple(
        (w, replace(p, k1=p.k1.shift(s1), k2=p.k2.shift(s2))) for w, p in mu.terms
    ))


def scale(mu: MeasureDescriptor, k: float) -> MeasureDescriptor:
    return MeasureDescriptor(terms=tuple((k * w, p) for w, p in mu.terms))


# ---------------------------------------------------------------------------
# Bounds and certificates
# ---------------------------------------------------------------------------

def maximal_function_bound(mu: MeasureDescriptor, x) -> float:
    """g(x) = C_μ·∏ min(1, 2/(c_μ|xᵢ|)), dominating every centred local average of |f_μ|."""
    if M_L not in mu.membership:
        raise UnsupportedOperationError("maximal function bound needs a measure with a density")
    x = np.asarray(x, dtype=float)
    const, rate = mu.decay_bound
    with np.errstate(divide="ignore"):
        factors = np.minimum(1.0, 2.0 / (rate * np.abs(x)))
    out = const * np.prod(factors, axis=-1)
    return out[()] if np.ndim(out) == 0 else out


def phi(mu: MeasureDescriptor, u) -> float:
    """φ(u) = ∫ μ(B(x,u))² dx, bilinear over primitive pairs."""
    u1, u2 = (float(v) for v in u)
    if u1 <= 0 or u2 <= 0:
        raise DomainError("box edges must be positive")
    total = 0.0
    for w_a, p_a in mu.terms:
        for w_b, p_b in mu.terms:
            total += (w_a * p_a.amplitude * w_b * p_b.amplitude
                      * pair_axis_integral(p_a.k1, p_b.k1, u1)
                      * pair_axis_integral(p_a.k2, p_b.k2, u2))
    return max(total, 0.0)


def phi_bound_constant(mu: MeasureDescriptor) -> float:
    """C with φ(u) ≤ C·min(u₁,u₁²)·min(u₂,u₂²).

    Each kernel peaks at 1, so ∫I(x;u)²dx ≤ m·u·min(u,m) ≤ m·max(1,m)·min(u,u²)
    per axis; combinations follow from Minkowski on √φ.
    """
    root = 0.0
    for w, p in mu.terms:
        axis = [k.mass * max(1.0, k.mass) for k in p.kernels]
        root += abs(w * p.amplitude) * math.sqrt(axis[0] * axis[1])
    return root * root


def _min_power(u, alpha):
    return np.minimum(u, u ** alpha)


def certify_membership(mu: MeasureDescriptor, n: int = 1000, seed: int = 0,
                       u_range: tuple[float, float] = (1e-3, 1e3)) -> Certificate:
    """Sample u log-uniformly and compare φ(u) with the analytic envelope."""
    rng = np.random.default_rng(seed)
    lo, hi = (math.log(v) for v in u_range)
    us = np.exp(rng.uniform(lo, hi, size=(n, 2)))
    const = phi_bound_constant(mu)
    a1, a2 = mu.alpha_exponents
    worst = 0.0
    for u1, u2 in us:
        envelope = const * _min_power(u1, a1) * _min_power(u2, a2)
        value = phi(mu, (u1, u2))
        if envelope > 0:
            worst = max(worst, value / envelope)
        elif value > 0:
            worst = math.inf
    cert = Certificate(constant=const, alpha=(a1, a2), max_ratio=worst, samples=n,
                       passed=worst <= 1.0 + 1e-6)
    logger.debug("membership certificate: %s", cert)
    return cert


def line_convergence_profile(mu: MeasureDescriptor, x, u1: float, widths) -> np.ndarray:
    """|μ(B(x,(u₁,ε)))/ε − line_mass(μ,x,u₁)| for each ε in `widths`."""
    x = np.asarray(x, dtype=float)
    target = line_mass(mu, x, u1)
    widths = np.asarray(widths, dtype=float)
    masses = mu.box_mass_xy(x[0], x[1], u1, widths)
    return np.abs(masses / widths - target)


# ---------------------------------------------------------------------------
# Mini-language and JSON mirror
# ---------------------------------------------------------------------------

def _parse_kv(body: str, allowed: set[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        if "=" not in item:
            raise DomainError(f"expected key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in allowed:
            raise DomainError(f"unknown parameter {key!r}; expected one of {sorted(allowed)}")
        try:
            out[key] = float(raw)
        except ValueError as exc:
            raise DomainError(f"parameter {key} is not a number: {raw!r}") from exc
    return out


def parse_measure(text: str) -> MeasureDescriptor:
    """Parse the measure mini-language (see module docstring)."""
    text = text.strip()
    if text == "zero":
        return zero_measure()
    head, sep, body = text.partition(":")
    if not sep:
        raise DomainError(f"measure spec needs a family prefix: {text!r}")
    head = head.strip().lower()
    if head == "laplace":
        return laplace_product(**_parse_kv(body, {"C", "c", "c1", "c2", "x", "y"}))
    if head in ("gauss", "gaussian"):
        return gaussian_product(**_parse_kv(body, {"A", "w", "w1", "w2", "x", "y"}))
    if head == "box":
        items = [s.strip() for s in body.split(",") if s.strip()]
        corners = [s for s in items if "=" not in s]
        extra = _parse_kv(",".join(s for s in items if "=" in s), {"A"})
        if len(corners) != 4:
            raise DomainError(f"box needs four corners x0,y0,x1,y1 (got {body!r})")
        try:
            x0, y0, x1, y1 = (float(v) for v in corners)
        except ValueError as exc:
            raise DomainError(f"box corners must be numbers: {body!r}") from exc
        return box_indicator(x0, y0, x1, y1, **extra)
    if head == "combo":
        parts = []
        for chunk in filter(None, (s.strip() for s in body.split(";"))):
            weight, star, spec = chunk.partition("*")
            if not star:
                raise DomainError(f"combo term must look like weight*spec: {chunk!r}")
            try:
                parts.append((float(weight), parse_measure(spec)))
            except ValueError as exc:
                raise DomainError(f"combo weight is not a number: {weight!r}") from exc
        return combine(*parts)
    raise DomainError(f"unknown measure family {head!r}")


def measure_to_dict(mu: MeasureDescriptor) -> dict:
    return {
        "family": mu.family.value,
        "terms": [
            {
                "weight": w,
                "amplitude": p.amplitude,
                "kernels": [{"kind": k.kind.value, "center": k.center, "scale": k.scale} for k in p.kernels],
            }
            for w, p in mu.terms
        ],
    }


def measure_from_dict(data: dict) -> MeasureDescriptor:
    if "spec" in data:
        return parse_measure(str(data["spec"]))
    try:
        terms = []
        for term in data.get("terms", []):
            kernels = [Kernel(KernelKind(k["kind"]), float(k["center"]), float(k["scale"]))
                       for k in term["kernels"]]
            if len(kernels) != 2:
                raise DomainError("each term needs exactly two kernels")
            terms.append((float(term.get("weight", 1.0)),
                          Primitive(float(term["amplitude"]), kernels[0], kernels[1])))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed measure description: {exc}") from exc
    return MeasureDescriptor(terms=tuple(terms))
