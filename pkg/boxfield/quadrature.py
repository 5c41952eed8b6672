"""
Deterministic integration over (x, u) ∈ R² × R₊² and the exact pre-limit CF.

Quadratic functionals (covariances, σ², φ) are bilinear over primitive pairs
and factor per axis into one-dimensional edge integrals

    Q = ∫ P(u)·w(u) du,   P(u) = ∫ I_a(x;u)·I_b(x;u) dx

computed with scipy's adaptive quadrature in log coordinates, an exact
quadratic small-edge tail and an exact linear large-edge tail.

Ψ-functionals (pre-limit CF, J_I, J_L) of a single primitive use its product
structure: each axis is discretized as weighted atoms of the push-forward of
dx·w(u)du under (x, u) ↦ I(x;u), compressed into bins with moment-matched
two-point rules, and the exponent is the double sum Σ ω_j ω'_k Ψ(τ A a_j b_k).
For a linear combination the atoms on each axis are K-vectors (I_k(x;u))_k.
Pairs of edge nodes whose phase stays below a small bound enter through a
fourth-order Taylor expansion of Ψ, which factors per axis. The remaining pairs
are pushed forward to m = Σ_k A_k a_k b_k and binned into one-dimensional
two-point rules, reused for every t of the same phase bucket.
Panel widths shrink with the largest phase the sum can reach. The error
estimate is the difference between two resolutions.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate as sp_integrate

from boxfield.errors import DomainError, QuadratureError, UnsupportedOperationError
from boxfield.measures import (
    Kernel,
    KernelKind,
    MeasureDescriptor,
    density_inner,
    pair_axis_integral,
)
from boxfield.tails import EdgeLaw, cap_for_tail_moment, moment

logger = logging.getLogger(__name__)

_PSI_SERIES = 1e-3
_LEVELS = (
    # order, max log-panel width, log bins, phase per bin
    (8, 0.5, 256, 0.5),
    (12, 0.25, 512, 0.25),
)
_MAX_SUB = 64
_MAX_LINEAR_BINS = 4096


class IntegrandKind(str, Enum):
    PSI_OF_BOX_MASS = "psi_of_box_mass"
    SQUARE_OF_BOX_MASS = "square_of_box_mass"
    PSI_OF_LINE_FUNCTIONAL = "psi_of_line_functional"
    SQUARE_OF_LINE_FUNCTIONAL = "square_of_line_functional"
    DENSITY_PRODUCT = "density_product"


class WeightKind(str, Enum):
    PURE_POWER = "pure_power"          # u₁^{−γ₁−1}·u₂^{−γ₂−1} du
    POWER_TIMES_F2 = "power_times_f2"  # u₁^{−γ₁−1}·f₂(u₂) du
    EDGE_LAW = "edge_law"              # F_ρ(du), the law of ρu


@dataclass(frozen=True)
class IntegrandSpec:
    kind: IntegrandKind
    mu: MeasureDescriptor
    nu: MeasureDescriptor | None = None
    weight: WeightKind = WeightKind.PURE_POWER
    gamma1: float | None = None
    gamma2: float | None = None
    law1: EdgeLaw | None = None
    law2: EdgeLaw | None = None
    rho: float = 1.0
    t: float = 0.0


# ---------------------------------------------------------------------------
# Ψ
# ---------------------------------------------------------------------------

def psi(v):
    """Ψ(v) = e^{iv} − 1 − iv without cancellation for small |v|."""
    v = np.asarray(v, dtype=float)
    half = np.sin(0.5 * v)
    v2 = v * v
    im = np.where(np.abs(v) < _PSI_SERIES, -v * v2 / 6.0 * (1.0 - v2 / 20.0), np.sin(v) - v)
    return -2.0 * half * half + 1j * im


def psi_pair_sum(a, wa, b, wb, scale: float) -> complex:
    """Σ_j Σ_k wa_j·wb_k·Ψ(scale·a_j·b_k), blocked to bound memory."""
    if a.size == 0 or b.size == 0:
        return 0j
    block = max(1, 2_000_000 // b.size)
    total = 0j
    for start in range(0, a.size, block):
        v = scale * a[start:start + block, None] * b[None, :]
        total += complex(wa[start:start + block] @ psi(v) @ wb)
    return total


def psi_power_integral(gamma: float, tol: float = 1e-12) -> complex:
    """∫₀^∞ Ψ(u)·u^{−γ−1} du by quadrature (algebraic weight near 0, Fourier weight on the tail)."""
    if not 1.0 < gamma < 2.0:
        raise DomainError(f"Ψ power integral needs 1 < γ < 2 (got {gamma})")

    def cos_part(u):
        return -0.5 * np.sinc(u / (2.0 * math.pi)) ** 2

    def sin_part(u):
        if abs(u) < 1e-2:
            u2 = u * u
            return -1.0 / 6.0 + u2 / 120.0 - u2 * u2 / 5040.0
        return (math.sin(u) - u) / u ** 3

    # (cos u − 1)·u^{−γ−1} = cos_part(u)·u^{1−γ};  (sin u − u)·u^{−γ−1} = sin_part(u)·u^{2−γ}
    re_near, e1 = sp_integrate.quad(cos_part, 0.0, 1.0, weight="alg", wvar=(1.0 - gamma, 0.0), epsabs=tol)
    im_near, e2 = sp_integrate.quad(sin_part, 0.0, 1.0, weight="alg", wvar=(2.0 - gamma, 0.0), epsabs=tol)
    tail = lambda u: u ** (-gamma - 1.0)  # noqa: E731
    re_far, e3 = sp_integrate.quad(tail, 1.0, np.inf, weight="cos", wvar=1.0, epsabs=tol)
    im_far, e4 = sp_integrate.quad(tail, 1.0, np.inf, weight="sin", wvar=1.0, epsabs=tol)
    re = re_near + re_far - 1.0 / gamma
    im = im_near + im_far - 1.0 / (gamma - 1.0)
    logger.debug("Ψ power integral γ=%s: %s (err ≤ %.2g)", gamma, complex(re, im), e1 + e2 + e3 + e4)
    return complex(re, im)


# ---------------------------------------------------------------------------
# One-dimensional edge integrals
# ---------------------------------------------------------------------------

def integrate_power_weighted(g, gamma: float, lo: float = 0.0, tol: float = 1e-9) -> float:
    """∫_lo^∞ g(u)·u^{−γ−1} du in log coordinates, split at u = 1."""
    def integrand(s):
        return g(math.exp(s)) * math.exp(-gamma * s)

    pieces = []
    err = 0.0
    if lo < 1.0:
        start = -np.inf if lo <= 0.0 else math.log(lo)
        val, e = sp_integrate.quad(integrand, start, 0.0, limit=200, epsabs=tol * 1e-2, epsrel=1e-11)
        pieces.append(val)
        err += e
    val, e = sp_integrate.quad(integrand, max(0.0, math.log(lo)) if lo > 0 else 0.0, np.inf,
                               limit=200, epsabs=tol * 1e-2, epsrel=1e-11)
    pieces.append(val)
    err += e
    total = math.fsum(pieces)
    if err > tol * max(1.0, abs(total)):
        raise QuadratureError(f"edge integral did not converge (err {err:.3g})", best_estimate=total, error_bound=err)
    return total


def _reach(k: Kernel) -> tuple[float, float]:
    return k.support()


@lru_cache(maxsize=4096)
def axis_pair_power_integral(k_a: Kernel, k_b: Kernel, gamma: float, coef: float = 1.0,
                             lo: float = 0.0, tol: float = 1e-10) -> tuple[float, float]:
    """coef·∫_lo^∞ P(u)·u^{−γ−1} du with P(u) = ∫ I_a(x;u)·I_b(x;u) dx; returns (value, error)."""
    lo_a, hi_a = _reach(k_a)
    lo_b, hi_b = _reach(k_b)
    span = max(hi_a, hi_b) - min(lo_a, lo_b)
    upper = max(2.0 * span, lo)
    mass = k_a.mass * k_b.mass

    small = 0.0
    if lo <= 0.0:
        start = 1e-6 * min(k_a.scale, k_b.scale)
        if gamma < 2.0:
            small = k_a.overlap(k_b) * start ** (2.0 - gamma) / (2.0 - gamma)
    else:
        start = lo

    middle, err = 0.0, 0.0
    if start < upper:
        breaks = []
        for k in (k_a, k_b):
            if not k.continuous:
                breaks.append(2.0 * k.scale)
        breaks += [abs(p - q) for p in (lo_a, hi_a) for q in (lo_b, hi_b)]
        pts = sorted({math.log(b) for b in breaks if start < b < upper})
        middle, err = sp_integrate.quad(
            lambda s: pair_axis_integral(k_a, k_b, math.exp(s)) * math.exp(-gamma * s),
            math.log(start), math.log(upper), points=pts or None, limit=400,
            epsabs=tol * 1e-2, epsrel=1e-11,
        )

    at_upper = pair_axis_integral(k_a, k_b, upper)
    offset = mass * upper - at_upper
    tail = mass * upper ** (1.0 - gamma) / (gamma - 1.0) - offset * upper ** (-gamma) / gamma
    return coef * (small + middle + tail), coef * err


def _primitive_terms(mu: MeasureDescriptor):
    return [(w * p.amplitude, p) for w, p in mu.terms if w * p.amplitude != 0.0]


def box_covariance(mu: MeasureDescriptor, nu: MeasureDescriptor, axis_weights, tol: float) -> float:
    """Σ_pairs A·A'·Q₁·Q₂ where Q_i uses axis_weights[i] = (γ, coef, lo)."""
    total, err = 0.0, 0.0
    for amp_a, p_a in _primitive_terms(mu):
        for amp_b, p_b in _primitive_terms(nu):
            q1, e1 = axis_pair_power_integral(p_a.k1, p_b.k1, *axis_weights[0])
            q2, e2 = axis_pair_power_integral(p_a.k2, p_b.k2, *axis_weights[1])
            total += amp_a * amp_b * q1 * q2
            err += abs(amp_a * amp_b) * (abs(q1) * e2 + abs(q2) * e1)
    if err > tol * max(1.0, abs(total)):
        raise QuadratureError(f"box covariance error {err:.3g} exceeds tolerance {tol:.3g}",
                              best_estimate=total, error_bound=err)
    return total


def line_covariance(mu: MeasureDescriptor, nu: MeasureDescriptor, gamma1: float, tol: float) -> float:
    """∫∫ L_μ(x,u₁)·L_ν(x,u₁)·u₁^{−γ₁−1} dx du₁ with L the segment mass along x₁."""
    total, err = 0.0, 0.0
    for amp_a, p_a in _primitive_terms(mu):
        for amp_b, p_b in _primitive_terms(nu):
            q1, e1 = axis_pair_power_integral(p_a.k1, p_b.k1, gamma1, 1.0, 0.0)
            ov = p_a.k2.overlap(p_b.k2)
            total += amp_a * amp_b * q1 * ov
            err += abs(amp_a * amp_b * ov) * e1
    if err > tol * max(1.0, abs(total)):
        raise QuadratureError(f"line covariance error {err:.3g} exceeds tolerance {tol:.3g}",
                              best_estimate=total, error_bound=err)
    return total


# ---------------------------------------------------------------------------
# Atoms of the push-forward measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AxisAtoms:
    values: np.ndarray
    weights: np.ndarray
    # quadratic small-edge tail: coef·∫k^p dy·u_s^{p−γ}/(p−γ) for the p-th moment
    small_coef: float = 0.0
    small_gamma: float = 0.0
    small_u: float = 0.0
    small_kernel: Kernel | None = None

    def small_moment(self, p: float) -> float:
        if self.small_kernel is None or self.small_coef == 0.0:
            return 0.0
        k = self.small_kernel
        return self.small_coef * k.power_integral(p) * self.small_u ** (p - self.small_gamma) / (p - self.small_gamma)

    def moment(self, p: float) -> float:
        main = float(self.weights @ self.values ** p) if self.values.size else 0.0
        return main + self.small_moment(p)

    @property
    def top(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0


def _log_panels(start: float, stop: float, c_max: float, cap: float, h_max: float, breaks=()) -> np.ndarray:
    """Edges in s = log u with width ≤ h_max and phase c_max·min(u,cap)·width ≤ 4."""
    s_lo, s_hi = math.log(start), math.log(stop)
    h_min = max((s_hi - s_lo) / 4000.0, 1e-6)
    marks = sorted({s_hi} | {math.log(b) for b in breaks if start < b < stop})
    edges = [s_lo]
    s = s_lo
    for mark in marks:
        while s < mark - 1e-12:
            reach = min(math.exp(min(s + h_max, s_hi)), cap)
            width = h_max if c_max * reach <= 0 else min(h_max, 4.0 / (c_max * reach))
            s = min(s + max(width, h_min), mark)
            edges.append(s)
    return np.asarray(edges)


def _gl_on_edges(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = (hi - lo) / 2.0
    return ((lo + hi) / 2.0 + half * nodes).ravel(), (half * weights).ravel()


def _subdivide(lo: np.ndarray, hi: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Edges after splitting panel i into counts[i] equal parts."""
    starts = np.repeat(lo, counts)
    widths = np.repeat((hi - lo) / counts, counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    return np.append(starts + offsets * widths, hi[-1])


def _x_rule(k0: Kernel, u: float, c_max: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """x-nodes for I(x;u) around a centred kernel, split where the phase moves fast."""
    reach = k0.support()[1]
    outer = u / 2.0 + reach
    pts = {-outer, outer}
    for p in k0.breakpoints():
        pts.update((p - u / 2.0, p + u / 2.0))
    edges = np.array(sorted(v for v in pts if -outer <= v <= outer))
    lo, hi = edges[:-1], edges[1:]
    if c_max > 0:
        slope = np.maximum(
            k0.value(np.clip(0.0, lo + u / 2.0, hi + u / 2.0)),
            k0.value(np.clip(0.0, lo - u / 2.0, hi - u / 2.0)),
        )
        counts = np.clip(np.ceil(c_max * slope * (hi - lo) / 4.0), 1, _MAX_SUB).astype(int)
        if counts.max() > 1:
            edges = _subdivide(lo, hi, counts)
    return _gl_on_edges(edges, order)


def _bucket(c_max: float) -> float:
    return float(2.0 ** math.ceil(math.log2(max(c_max, 1.0))))


@lru_cache(maxsize=256)
def power_axis_atoms(kernel: Kernel, gamma: float, coef: float, lo: float, c_max: float, level: int) -> AxisAtoms:
    """Atoms of the push-forward of dx·coef·u^{−γ−1}du (u > lo) under (x,u) ↦ I(x;u)."""
    order, h_max, _, _ = _LEVELS[level]
    k0 = Kernel(kernel.kind, 0.0, kernel.scale)
    reach = k0.support()[1]
    mass = k0.mass
    upper = max(4.0 * reach, lo)
    u_small = 1e-8 * kernel.scale
    start = lo if lo > 0 else u_small

    values, weights = [], []
    if start < upper:
        breaks = () if k0.continuous else (2.0 * k0.scale,)
        s_edges = _log_panels(start, upper, c_max, mass, h_max, breaks)
        s_nodes, s_weights = _gl_on_edges(s_edges, order)
        for s, ws in zip(s_nodes, s_weights):
            u = math.exp(s)
            xs, wx = _x_rule(k0, u, c_max, order)
            values.append(k0.centered(xs, u))
            weights.append(wx * (ws * coef * math.exp(-gamma * s)))

    # u > upper: the profile at `upper` plus a plateau growing like (u − upper)
    xs, wx = _x_rule(k0, upper, c_max, order)
    values.append(k0.centered(xs, upper))
    weights.append(wx * (coef * upper ** (-gamma) / gamma))
    values.append(np.array([mass]))
    weights.append(np.array([coef * upper ** (1.0 - gamma) / (gamma * (gamma - 1.0))]))

    a = np.concatenate(values)
    w = np.concatenate(weights)
    keep = (a > 0.0) & np.isfinite(a) & (w > 0.0)
    atoms = AxisAtoms(
        values=a[keep], weights=w[keep],
        small_coef=coef if lo <= 0 else 0.0, small_gamma=gamma, small_u=u_small,
        small_kernel=k0 if lo <= 0 else None,
    )
    logger.debug("axis atoms γ=%s level=%d c_max=%.3g: %d atoms", gamma, level, c_max, atoms.values.size)
    return atoms


@lru_cache(maxsize=64)
def width_axis_atoms(kernel: Kernel, law: EdgeLaw, upper: float, c_max: float, level: int) -> AxisAtoms:
    """Atoms of dx₂·f₂(u₂)du₂ pushed forward by (x₂, u₂) ↦ u₂·k(x₂), u₂ ≤ upper."""
    order, h_max, _, _ = _LEVELS[level]
    k0 = Kernel(kernel.kind, 0.0, kernel.scale)
    upper = max(upper, law.u_min * (1.0 + 1e-9))
    # phase refinement stops at a high quantile; heavier widths carry negligible weight
    typical = min(upper, float(law.ppf(0.999)))
    s_edges = _log_panels(law.u_min, upper, c_max, typical, h_max)
    s_nodes, s_weights = _gl_on_edges(s_edges, order)
    u2 = np.exp(s_nodes)
    wu = s_weights * law.tail_constant * np.exp(-law.gamma * s_nodes)

    lo_x, hi_x = k0.support()
    pts = [lo_x, hi_x] + [b for b in k0.breakpoints() if lo_x <= b <= hi_x]
    edges = np.unique(pts)
    if c_max > 0:
        lo, hi = edges[:-1], edges[1:]
        slope = k0.value(np.clip(0.0, lo, hi)) / k0.scale
        counts = np.clip(np.ceil(c_max * typical * slope * (hi - lo) / 4.0), 1, _MAX_SUB).astype(int)
        if counts.max() > 1:
            edges = _subdivide(lo, hi, counts)
    xs, wx = _gl_on_edges(edges, order)
    kx = k0.value(xs)
    b = (u2[:, None] * kx[None, :]).ravel()
    w = (wu[:, None] * wx[None, :]).ravel()
    keep = (b > 0.0) & (w > 0.0)
    return AxisAtoms(values=b[keep], weights=w[keep])


def _moment_rule(base, m0, mean, var, skew, used) -> tuple[np.ndarray, np.ndarray]:
    """Two atoms per bin matching mass, mean, variance and third central moment of z = a/base − 1."""
    spread = var > 1e-28
    var_s = np.where(spread, var, 1.0)
    d = skew / var_s
    root = np.sqrt(d * d + 4.0 * var_s)
    z_hi = mean + (d + root) / 2.0
    z_lo = mean + (d - root) / 2.0
    p_hi = np.where(spread, (mean - z_lo) / (z_hi - z_lo), 1.0)
    nodes = np.concatenate([base * (1.0 + np.where(spread, z_hi, mean)), base * (1.0 + z_lo)])
    weights = np.concatenate([m0 * p_hi, m0 * (1.0 - p_hi)])
    keep = np.concatenate([used, used & spread]) & (weights > 0)
    return nodes[keep], weights[keep]


def compress(atoms: AxisAtoms, c_max: float, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Two-point moment-matched rule per bin; bins are log-spaced, then linear where c_max·width must stay small."""
    _, _, n_log, phase = _LEVELS[level]
    a, w = atoms.values, atoms.weights
    if a.size == 0:
        return a, w
    a_min, a_max = float(a.min()), float(a.max())
    if a_max <= a_min * (1.0 + 1e-12):
        return np.array([a_min]), np.array([w.sum()])
    log_edges = np.geomspace(a_min, a_max * (1.0 + 1e-12), n_log + 1)
    ratio = log_edges[1] / log_edges[0] - 1.0
    if c_max > 0:
        step = max(phase / c_max, (a_max - a_min) / _MAX_LINEAR_BINS)
        switch = step / ratio
        if switch < a_max:
            lin_edges = np.arange(max(switch, a_min), a_max * (1.0 + 1e-12) + step, step)
            log_edges = np.concatenate([log_edges[log_edges < lin_edges[0]], lin_edges])
    idx = np.clip(np.searchsorted(log_edges, a, side="right") - 1, 0, log_edges.size - 2)
    n_bins = log_edges.size - 1
    ref = log_edges[idx]
    z = a / ref - 1.0
    m0 = np.bincount(idx, weights=w, minlength=n_bins)
    used = m0 > 0
    safe = np.where(used, m0, 1.0)
    mean = np.bincount(idx, weights=w * z, minlength=n_bins) / safe
    dev = z - mean[idx]
    var = np.bincount(idx, weights=w * dev * dev, minlength=n_bins) / safe
    skew = np.bincount(idx, weights=w * dev ** 3, minlength=n_bins) / safe
    return _moment_rule(log_edges[:-1], m0, mean, var, skew, used)


# ---------------------------------------------------------------------------
# Linear combinations
# ---------------------------------------------------------------------------

_COMBO_LEVELS = (
    # order, max log-panel width, log bins, phase per bin, Taylor bound on |τ·m|
    (6, 0.7, 2048, 0.2, 0.03),
    (7, 0.5, 4096, 0.1, 0.015),
)
# Breakpoints in kernel scales. Past the last one a Laplace kernel is below
# e^-15 and a Gaussian below e^-21.
_COMBO_GRADING = {
    KernelKind.LAPLACE: (1.0, 3.0, 7.0, 15.0),
    KernelKind.GAUSS: (1.0, 2.0, 3.5, 6.5),
}
_BLOCK = 2_000_000


def _tight_points(k: Kernel) -> list[float]:
    if not k.continuous:
        return k.breakpoints()
    pts = [k.center]
    for g in _COMBO_GRADING[k.kind]:
        pts += [k.center - g * k.scale, k.center + g * k.scale]
    return pts


def _kinks(k: Kernel) -> list[float]:
    if not k.continuous:
        return k.breakpoints()
    return [k.center] if k.kind is KernelKind.LAPLACE else []


def _outer_power(a: np.ndarray, p: int) -> np.ndarray:
    out = a
    for _ in range(p - 1):
        out = np.outer(out, a).ravel()
    return out


@dataclass(frozen=True, eq=False)
class VectorAxis:
    """One axis of a linear combination: K-vectors of per-kernel profiles grouped by edge node.

    Node j holds the atoms from starts[j] up to the next start. `small` is the
    quadratic tensor coef·∫k_a·k_b·u_s^{2−γ}/(2−γ) of the edges below the first node.
    """

    values: np.ndarray
    weights: np.ndarray
    starts: np.ndarray
    small: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.starts.size)

    def node_of_atom(self) -> np.ndarray:
        counts = np.diff(np.append(self.starts, self.weights.size))
        return np.repeat(np.arange(self.n_nodes), counts)

    def node_max(self) -> np.ndarray:
        return np.maximum.reduceat(self.values, self.starts, axis=0)

    def node_moments(self, p: int) -> np.ndarray:
        """Σ ω·v^{⊗p} over the atoms of each node, flattened to K^p columns."""
        prod = self.values
        for _ in range(p - 1):
            prod = (prod[:, :, None] * self.values[:, None, :]).reshape(prod.shape[0], -1)
        return np.add.reduceat(prod * self.weights[:, None], self.starts, axis=0)

    def gram(self) -> np.ndarray:
        return (self.values * self.weights[:, None]).T @ self.values


def _vector_axis(values: list, weights: list, small: np.ndarray) -> VectorAxis:
    counts = np.array([w.size for w in weights])
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])[counts > 0]
    return VectorAxis(np.concatenate(values), np.concatenate(weights), starts.astype(int), small)


def _combo_x_rule(kernels, u: float, slopes, c_max: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """x-nodes for the window masses of several kernels, split at every shifted breakpoint."""
    pts = set()
    for k in kernels:
        for p in _tight_points(k):
            pts.update((p - u / 2.0, p + u / 2.0))
    edges = np.array(sorted(pts))
    if c_max > 0:
        lo, hi = edges[:-1], edges[1:]
        slope = np.zeros(lo.size)
        for k, s in zip(kernels, slopes):
            slope += s * np.maximum(
                k.value(np.clip(k.center, lo + u / 2.0, hi + u / 2.0)),
                k.value(np.clip(k.center, lo - u / 2.0, hi - u / 2.0)),
            )
        counts = np.clip(np.ceil(c_max * slope * (hi - lo) / 4.0), 1, _MAX_SUB).astype(int)
        if counts.max() > 1:
            edges = _subdivide(lo, hi, counts)
    return _gl_on_edges(edges, order)


@lru_cache(maxsize=64)
def combo_power_axis(kernels: tuple[Kernel, ...], slopes: tuple[float, ...], gamma: float, coef: float,
                     lo: float, c_max: float, level: int) -> VectorAxis:
    """Atoms of dx·coef·u^{−γ−1}du (u > lo) pushed forward by (x,u) ↦ (I_k(x;u))_k.

    `slopes[k]` bounds how fast term k moves the phase per unit of I_k.
    """
    order, h_max = _COMBO_LEVELS[level][:2]
    pts = [p for k in kernels for p in _tight_points(k)]
    upper = max(max(pts) - min(pts), lo)
    masses = np.array([k.mass for k in kernels])
    u_small = 1e-8 * min(k.scale for k in kernels)
    start = lo if lo > 0 else u_small

    values, weights = [], []
    if start < upper:
        kinks = [p for k in kernels for p in _kinks(k)]
        breaks = {abs(p - q) for p in kinks for q in kinks if p != q}
        s_edges = _log_panels(start, upper, c_max * sum(slopes), float(masses.max()), h_max, breaks)
        s_nodes, s_weights = _gl_on_edges(s_edges, order)
        for s, ws in zip(s_nodes, s_weights):
            u = math.exp(s)
            xs, wx = _combo_x_rule(kernels, u, slopes, c_max, order)
            values.append(np.column_stack([k.centered(xs, u) for k in kernels]))
            weights.append(wx * (ws * coef * math.exp(-gamma * s)))

    # u > upper ≥ joint support width: the profile at `upper` plus a plateau growing like (u − upper)
    xs, wx = _combo_x_rule(kernels, upper, slopes, c_max, order)
    values.append(np.column_stack([k.centered(xs, upper) for k in kernels]))
    weights.append(wx * (coef * upper ** (-gamma) / gamma))
    values.append(masses[None, :])
    weights.append(np.array([coef * upper ** (1.0 - gamma) / (gamma * (gamma - 1.0))]))

    small = np.zeros((len(kernels), len(kernels)))
    if lo <= 0 and gamma < 2.0:
        for a, k_a in enumerate(kernels):
            for b, k_b in enumerate(kernels):
                small[a, b] = coef * k_a.overlap(k_b) * u_small ** (2.0 - gamma) / (2.0 - gamma)
    axis = _vector_axis(values, weights, small)
    logger.debug("combination axis γ=%s level=%d c_max=%.3g: %d nodes, %d atoms",
                 gamma, level, c_max, axis.n_nodes, axis.weights.size)
    return axis


@lru_cache(maxsize=64)
def combo_width_axis(kernels: tuple[Kernel, ...], slopes: tuple[float, ...], law: EdgeLaw, upper: float,
                     c_max: float, level: int) -> VectorAxis:
    """Atoms of dx₂·f₂(u₂)du₂ pushed forward by (x₂,u₂) ↦ (u₂·k(x₂))_k, u₂ ≤ upper."""
    order, h_max = _COMBO_LEVELS[level][:2]
    upper = max(upper, law.u_min * (1.0 + 1e-9))
    typical = min(upper, float(law.ppf(0.999)))
    s_edges = _log_panels(law.u_min, upper, c_max * sum(slopes), typical, h_max)
    s_nodes, s_weights = _gl_on_edges(s_edges, order)
    wu = s_weights * law.tail_constant * np.exp(-law.gamma * s_nodes)

    edges = np.unique([p for k in kernels for p in _tight_points(k)])
    if c_max > 0:
        lo, hi = edges[:-1], edges[1:]
        slope = np.zeros(lo.size)
        for k, s in zip(kernels, slopes):
            slope += s * k.value(np.clip(k.center, lo, hi)) / k.scale
        counts = np.clip(np.ceil(c_max * typical * slope * (hi - lo) / 4.0), 1, _MAX_SUB).astype(int)
        if counts.max() > 1:
            edges = _subdivide(lo, hi, counts)
    xs, wx = _gl_on_edges(edges, order)
    kx = np.column_stack([k.value(xs) for k in kernels])
    values = [u2 * kx for u2 in np.exp(s_nodes)]
    weights = [w * wx for w in wu]
    return _vector_axis(values, weights, np.zeros((len(kernels), len(kernels))))


class _MomentBins:
    """Streaming per-bin moments of signed atoms m; |m| below `floor` feeds Σω·m^p, p = 2..4, instead."""

    def __init__(self, floor: float, top: float, c_max: float, n_log: int, phase: float):
        top = max(top, 2.0 * floor) * (1.0 + 1e-12)
        edges = np.geomspace(floor, top, n_log + 1)
        self.log_step = math.log(edges[1] / edges[0])
        self.n_log = n_log
        self.lin_start, self.step = math.inf, 1.0
        step = max(phase / c_max, (top - floor) / _MAX_LINEAR_BINS)
        switch = step / (edges[1] / edges[0] - 1.0)
        if switch < top:
            lin = np.arange(max(switch, floor), top + step, step)
            kept = edges[edges < lin[0]]
            self.n_log = kept.size
            self.lin_start, self.step = float(lin[0]), step
            edges = np.concatenate([kept, lin])
        self.floor = floor
        self.n = edges.size - 1
        self.mid = (edges[:-1] + edges[1:]) / 2.0
        self.moments = np.zeros((4, 2 * self.n))
        self.taylor = np.zeros(3)

    def add(self, m: np.ndarray, w: np.ndarray) -> None:
        a = np.abs(m)
        low = a < self.floor
        if low.any():
            ml, wl = m[low], w[low]
            m2 = ml * ml
            self.taylor += (float(wl @ m2), float(wl @ (m2 * ml)), float(wl @ (m2 * m2)))
            keep = ~low
            m, w, a = m[keep], w[keep], a[keep]
        if not m.size:
            return
        idx = np.where(
            a < self.lin_start,
            np.floor(np.log(a / self.floor) / self.log_step),
            self.n_log + np.floor((a - self.lin_start) / self.step),
        )
        idx = np.clip(idx, 0, self.n - 1).astype(int)
        z = a / self.mid[idx] - 1.0
        idx += self.n * (m < 0)
        wz = w * z
        wz2 = wz * z
        for row, weights in enumerate((w, wz, wz2, wz2 * z)):
            self.moments[row] += np.bincount(idx, weights=weights, minlength=2 * self.n)

    def rule(self) -> tuple[np.ndarray, np.ndarray]:
        m0, m1, m2, m3 = self.moments
        used = m0 > 0
        safe = np.where(used, m0, 1.0)
        mean = m1 / safe
        second = m2 / safe
        var = np.maximum(second - mean * mean, 0.0)
        skew = m3 / safe - 3.0 * mean * second + 2.0 * mean ** 3
        return _moment_rule(np.concatenate([self.mid, -self.mid]), m0, mean, var, skew, used)


@dataclass(frozen=True, eq=False)
class CombinationLaw:
    """Push-forward of the integration measure under (x,u) ↦ m for a linear combination.

    The exponent is Σ ω·Ψ(τ·m) over the atoms plus the Taylor part
    −τ²s₂/2 − iτ³s₃/6 + τ⁴s₄/24 of the pairs whose |τ·m| stays small.
    """

    nodes: np.ndarray
    weights: np.ndarray
    s2: float
    s3: float
    s4: float

    def exponent(self, tau: float) -> complex:
        main = complex(self.weights @ psi(tau * self.nodes)) if self.nodes.size else 0j
        return main - 0.5 * tau ** 2 * self.s2 - 1j * tau ** 3 / 6.0 * self.s3 + tau ** 4 / 24.0 * self.s4


def combination_law(axis1: VectorAxis, axis2: VectorAxis, amps: np.ndarray, c_max: float,
                    level: int) -> CombinationLaw:
    """Atoms of m = Σ_k A_k·v_k·y_k over pairs of atoms of the two axes, valid for |τ| ≤ c_max."""
    _, _, n_log, phase, taylor_bound = _COMBO_LEVELS[level]
    floor = taylor_bound / c_max
    bound = axis1.node_max() @ (np.abs(amps)[:, None] * axis2.node_max().T)
    small = bound <= floor

    sums = []
    mask = small.astype(float)
    for p in (2, 3, 4):
        g1, g2 = axis1.node_moments(p), axis2.node_moments(p)
        sums.append(float(np.einsum("cj,jc,c->", g1.T @ mask, g2, _outer_power(amps, p))))
    quad = np.outer(amps, amps) * (axis1.small * axis2.gram() + axis1.gram() * axis2.small
                                   + axis1.small * axis2.small)
    sums[0] += float(quad.sum())

    bins = _MomentBins(floor, float(bound.max()), c_max, n_log, phase)
    node2 = axis2.node_of_atom()
    scaled2 = axis2.values * amps
    ends1 = np.append(axis1.starts, axis1.weights.size)
    for i in np.flatnonzero(~small.all(axis=1)):
        take = ~small[i][node2]
        y, beta = scaled2[take], axis2.weights[take]
        v, alpha = axis1.values[ends1[i]:ends1[i + 1]], axis1.weights[ends1[i]:ends1[i + 1]]
        block = max(1, _BLOCK // max(v.shape[0], 1))
        for j in range(0, y.shape[0], block):
            m = v @ y[j:j + block].T
            bins.add(m.ravel(), (alpha[:, None] * beta[None, j:j + block]).ravel())
    nodes, weights = bins.rule()
    s2, s3, s4 = np.asarray(sums) + bins.taylor
    logger.debug("combination law level=%d c_max=%.3g: %d atoms, %d of %d node pairs expanded",
                 level, c_max, nodes.size, int(small.sum()), small.size)
    return CombinationLaw(nodes, weights, float(s2), float(s3), float(s4))


@lru_cache(maxsize=32)
def _box_combination(terms: tuple, axis1: tuple, axis2: tuple, c_max: float, level: int) -> CombinationLaw:
    amps = np.array([a for a, _ in terms])
    ax1 = combo_power_axis(tuple(p.k1 for _, p in terms), tuple(abs(a) * p.k2.mass for a, p in terms),
                           *axis1, c_max, level)
    ax2 = combo_power_axis(tuple(p.k2 for _, p in terms), tuple(abs(a) * p.k1.mass for a, p in terms),
                           *axis2, c_max, level)
    return combination_law(ax1, ax2, amps, c_max, level)


@lru_cache(maxsize=32)
def _line_combination(terms: tuple, gamma1: float, law2: EdgeLaw, upper: float, c_max: float,
                      level: int) -> CombinationLaw:
    amps = np.array([a for a, _ in terms])
    width_q = float(law2.ppf(0.999))
    ax1 = combo_power_axis(tuple(p.k1 for _, p in terms), tuple(abs(a) * width_q for a, _ in terms),
                           gamma1, 1.0, 0.0, c_max, level)
    ax2 = combo_width_axis(tuple(p.k2 for _, p in terms), tuple(abs(a) * p.k1.mass for a, p in terms),
                           law2, upper, c_max, level)
    return combination_law(ax1, ax2, amps, c_max, level)


def _line_upper(terms, gamma1: float, law2: EdgeLaw, scale: float, tol: float) -> float:
    """Width cap beyond which the Ψ-integral changes by less than tol/100, for |τ| ≤ scale."""
    p = (gamma1 + min(law2.gamma, 2.0)) / 2.0
    norm = 0.0
    for amp, prim in terms:
        at1 = power_axis_atoms(prim.k1, gamma1, 1.0, 0.0, 1.0, 0)
        norm += abs(amp) * (at1.moment(p) * prim.k2.power_integral(p)) ** (1.0 / p)
    bound_const = 8.0 * 4.0 ** (-p) * scale ** p * norm ** p
    upper = cap_for_tail_moment(law2, p, max(tol * 1e-2, 1e-300) / max(bound_const, 1e-300))
    return max(upper, 10.0 * law2.u_min)


# ---------------------------------------------------------------------------
# Ψ exponents
# ---------------------------------------------------------------------------

def _box_exponent(amp: float, prim, axis1, axis2, tau: float, level: int) -> complex:
    """Σ Ψ(τ·A·a·b) over two power-weighted axes; axisN = (γ, coef, lo)."""
    m1, m2 = prim.k1.mass, prim.k2.mass
    c1 = _bucket(abs(tau * amp) * m2)
    c2 = _bucket(abs(tau * amp) * m1)
    at1 = power_axis_atoms(prim.k1, axis1[0], axis1[1], axis1[2], c1, level)
    at2 = power_axis_atoms(prim.k2, axis2[0], axis2[1], axis2[2], c2, level)
    a, wa = compress(at1, c1, level)
    b, wb = compress(at2, c2, level)
    total = psi_pair_sum(a, wa, b, wb, tau * amp)
    s1, s2 = at1.small_moment(2.0), at2.small_moment(2.0)
    if s1 or s2:
        main1, main2 = float(wa @ a ** 2), float(wb @ b ** 2)
        total += -0.5 * (tau * amp) ** 2 * (s1 * main2 + main1 * s2 + s1 * s2)
    return total


def _line_exponent(amp: float, prim, gamma1: float, law2: EdgeLaw, tau: float, level: int, tol: float) -> complex:
    """Σ Ψ(τ·A·I₁·u₂·k₂) with u₁^{−γ₁−1} on axis 1 and f₂ on axis 2."""
    scale = abs(tau * amp)
    p = (gamma1 + min(law2.gamma, 2.0)) / 2.0
    width_q = float(law2.ppf(0.999))
    c1 = _bucket(scale * width_q)
    at1 = power_axis_atoms(prim.k1, gamma1, 1.0, 0.0, c1, level)
    bound_const = 8.0 * 4.0 ** (-p) * scale ** p * at1.moment(p) * prim.k2.power_integral(p)
    upper = cap_for_tail_moment(law2, p, max(tol * 1e-2, 1e-300) / max(bound_const, 1e-300))
    upper = max(upper, 10.0 * law2.u_min)
    c2 = _bucket(scale * at1.top)
    at2 = width_axis_atoms(prim.k2, law2, upper, c2, level)
    a, wa = compress(at1, c1, level)
    b, wb = compress(at2, c2, level)
    total = psi_pair_sum(a, wa, b, wb, tau * amp)
    total += -0.5 * (tau * amp) ** 2 * at1.small_moment(2.0) * float(wb @ b ** 2)
    return total


def psi_box_exponent(mu: MeasureDescriptor, axis1, axis2, tau: float, level: int) -> complex:
    """∫∫ Ψ(τ·μ(B(x,u))) dx w₁(u₁)w₂(u₂) du at one resolution; axisN = (γ, coef, lo)."""
    terms = tuple(_primitive_terms(mu))
    if not terms or tau == 0.0:
        return 0j
    if len(terms) == 1:
        return _box_exponent(*terms[0], axis1, axis2, tau, level)
    return _box_combination(terms, tuple(axis1), tuple(axis2), _bucket(abs(tau)), level).exponent(tau)


def psi_line_exponent(mu: MeasureDescriptor, gamma1: float, law2: EdgeLaw, tau: float, level: int,
                      tol: float) -> complex:
    """∫ Ψ(τ·u₂·L_μ(x,u₁))·u₁^{−γ₁−1}f₂(u₂) d(x,u) at one resolution."""
    terms = tuple(_primitive_terms(mu))
    if not terms or tau == 0.0:
        return 0j
    if len(terms) == 1:
        return _line_exponent(*terms[0], gamma1, law2, tau, level, tol)
    c_max = _bucket(abs(tau))
    upper = _line_upper(terms, gamma1, law2, c_max, tol)
    return _line_combination(terms, gamma1, law2, upper, c_max, level).exponent(tau)


def _two_levels(fn, tol: float, label: str) -> complex:
    coarse = fn(0)
    fine = fn(1)
    value = cmath.exp(fine)
    err = abs(value - cmath.exp(coarse))
    logger.debug("%s: exponent %s (resolution difference %.3g)", label, fine, err)
    if err > tol:
        raise QuadratureError(f"{label}: resolution difference {err:.3g} exceeds tolerance {tol:.3g}",
                              best_estimate=value, error_bound=err)
    return value


def _edge_law_axes(law1: EdgeLaw, law2: EdgeLaw, rho: float) -> tuple[tuple, tuple]:
    return tuple((law.gamma, law.tail_constant * rho ** law.gamma, rho * law.u_min) for law in (law1, law2))


def prelimit_cf(plan, mu: MeasureDescriptor, t: float, tol: float = 1e-5) -> complex:
    """E exp(i t J̃_ρ(μ)/n_ρ) = exp(λ_ρ ∫∫ Ψ(t μ(B(x,ρu))/n_ρ) dx F(du)), axis-aligned boxes."""
    if t == 0.0 or mu.is_zero:
        return 1.0 + 0j
    tau = t / plan.n_rho
    axis1, axis2 = _edge_law_axes(plan.law1, plan.law2, plan.rho)
    return _two_levels(
        lambda level: plan.lambda_rho * psi_box_exponent(mu, axis1, axis2, tau, level),
        tol, f"pre-limit CF at t={t}",
    )


def cf_box_exponent(mu: MeasureDescriptor, gamma1: float, gamma2: float, t: float, tol: float = 1e-5) -> complex:
    """CF of J_I: exp(∫∫ Ψ(t·μ(B(x,u)))·u₁^{−γ₁−1}u₂^{−γ₂−1} dx du)."""
    if t == 0.0 or mu.is_zero:
        return 1.0 + 0j
    return _two_levels(
        lambda level: psi_box_exponent(mu, (gamma1, 1.0, 0.0), (gamma2, 1.0, 0.0), t, level),
        tol, f"intermediate CF at t={t}",
    )


def cf_line_exponent(mu: MeasureDescriptor, gamma1: float, law2: EdgeLaw, t: float, tol: float = 1e-5) -> complex:
    """CF of J_L: exp(∫ Ψ(t·u₂·L(x,u₁))·u₁^{−γ₁−1}f₂(u₂) d(x,u))."""
    if t == 0.0 or mu.is_zero:
        return 1.0 + 0j
    return _two_levels(
        lambda level: psi_line_exponent(mu, gamma1, law2, t, level, tol),
        tol, f"Poisson-lines CF at t={t}",
    )


def prelimit_variance(plan, mu: MeasureDescriptor, tol: float = 1e-7) -> float:
    """Var(J̃_ρ(μ)/n_ρ) = λ_ρ ∫∫ μ(B(x,ρu))² dx F(du) / n_ρ²."""
    weights = _edge_law_axes(plan.law1, plan.law2, plan.rho)
    return plan.lambda_rho * box_covariance(mu, mu, weights, tol) / plan.n_rho ** 2


# ---------------------------------------------------------------------------
# Generic entry point
# ---------------------------------------------------------------------------

def integrate(spec: IntegrandSpec, tol: float = 1e-7):
    """Evaluate one of the integrals arising in the limit theorems and the pre-limit CF.

    Ψ kinds return the (complex) exponent integral itself, not its exponential.
    """
    kind, weight = spec.kind, spec.weight
    nu = spec.nu if spec.nu is not None else spec.mu
    if kind is IntegrandKind.DENSITY_PRODUCT:
        return density_inner(spec.mu, nu)
    if kind is IntegrandKind.SQUARE_OF_BOX_MASS:
        return box_covariance(spec.mu, nu, _box_axes(spec), tol)
    if kind is IntegrandKind.SQUARE_OF_LINE_FUNCTIONAL:
        if weight is not WeightKind.POWER_TIMES_F2:
            raise UnsupportedOperationError(f"{kind.value} with {weight.value} weight")
        return moment(spec.law2, 2.0) * line_covariance(spec.mu, nu, spec.gamma1, tol)
    if kind is IntegrandKind.PSI_OF_BOX_MASS:
        axes = _box_axes(spec)
        if spec.mu.is_zero or spec.t == 0.0:
            return 0j
        return _converged(lambda level: psi_box_exponent(spec.mu, axes[0], axes[1], spec.t, level), tol)
    if kind is IntegrandKind.PSI_OF_LINE_FUNCTIONAL:
        if weight is not WeightKind.POWER_TIMES_F2:
            raise UnsupportedOperationError(f"{kind.value} with {weight.value} weight")
        if spec.mu.is_zero or spec.t == 0.0:
            return 0j
        return _converged(lambda level: psi_line_exponent(spec.mu, spec.gamma1, spec.law2, spec.t, level, tol), tol)
    raise UnsupportedOperationError(f"unknown integrand {kind}")


def _box_axes(spec: IntegrandSpec) -> tuple[tuple, tuple]:
    if spec.weight is WeightKind.PURE_POWER:
        return (spec.gamma1, 1.0, 0.0), (spec.gamma2, 1.0, 0.0)
    if spec.weight is WeightKind.EDGE_LAW:
        return _edge_law_axes(spec.law1, spec.law2, spec.rho)
    raise UnsupportedOperationError(f"{spec.kind.value} with {spec.weight.value} weight")


def _converged(fn, tol: float) -> complex:
    fine, coarse = fn(1), fn(0)
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise QuadratureError("Ψ integral did not converge", best_estimate=fine, error_bound=abs(fine - coarse))
    return fine
