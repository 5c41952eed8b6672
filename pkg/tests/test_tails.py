"""
Tests for edge-length laws and limit constants.
Run with: pytest tests/test_tails.py
"""

import math

import numpy as np
import pytest

from boxfield.errors import DivergentMomentError, DomainError
from boxfield.tails import (
    EdgeLawKind,
    cap_for_tail_moment,
    d_constant,
    edge_law,
    limit_constants,
    make_pareto,
    moment,
    partial_moment,
    sample_edge,
    sample_size_biased,
    tail_moment,
)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def test_unit_tail_umin(law15):
    """u_min = γ^(-1/γ)."""
    assert law15.u_min == pytest.approx(0.76314, abs=1e-5)
    assert law15.kind is EdgeLawKind.PARETO_UNIT_TAIL


def test_unit_tail_constant_is_one(law15, law25):
    assert law15.tail_constant == pytest.approx(1.0)
    assert law25.tail_constant == pytest.approx(1.0)


def test_density_matches_power_law_on_support(law15):
    u = np.array([0.8, 1.0, 3.0, 100.0])
    np.testing.assert_allclose(law15.density(u), u ** -2.5, rtol=1e-12)


def test_density_vanishes_below_umin(law15):
    assert law15.density(0.5) == 0.0
    assert law15.cdf(0.5) == 0.0
    assert law15.survival(0.5) == 1.0


def test_gamma_at_most_one_rejected():
    with pytest.raises(DomainError, match="tail index"):
        edge_law(1.0)
    with pytest.raises(DomainError):
        edge_law(0.5)


def test_general_pareto_needs_positive_umin():
    with pytest.raises(DomainError, match="u_min"):
        make_pareto(1.5, 0.0)


def test_explicit_umin_overrides_unit_tail():
    law = edge_law(1.5, u_min=2.0)
    assert law.kind is EdgeLawKind.PARETO_GENERAL
    assert law.u_min == 2.0
    assert law.tail_constant == pytest.approx(1.5 * 2.0 ** 1.5)


def test_cdf_and_ppf_are_inverse(law25):
    q = np.linspace(0.0, 0.99, 12)
    np.testing.assert_allclose(law25.cdf(law25.ppf(q)), q, atol=1e-12)
    assert law25.ppf(0.0) == pytest.approx(law25.u_min)


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

def test_first_moment_closed_form(law25):
    """E[u] = γ·u_min/(γ−1)."""
    assert moment(law25, 1.0) == pytest.approx(2.5 * law25.u_min / 1.5, rel=1e-12)
    assert moment(law25, 1.0) == pytest.approx(1.15524, abs=1e-4)


def test_moment_at_tail_index_diverges(law15):
    with pytest.raises(DivergentMomentError):
        moment(law15, 1.5)
    with pytest.raises(DivergentMomentError):
        moment(law15, 2.0)


def test_divergent_moment_is_a_domain_error(law15):
    with pytest.raises(DomainError):
        moment(law15, 3.0)


def test_partial_plus_tail_is_full(law25):
    for cap in (1.0, 5.0, 50.0):
        total = partial_moment(law25, 1.0, cap) + tail_moment(law25, 1.0, cap)
        assert total == pytest.approx(moment(law25, 1.0), rel=1e-12)


def test_partial_moment_above_tail_index_is_finite(law15):
    """Truncated second moment of an infinite-variance law."""
    value = partial_moment(law15, 2.0, 100.0)
    assert math.isfinite(value) and value > 0
    assert partial_moment(law15, 2.0, 1000.0) > value


def test_partial_moment_below_support(law15):
    assert partial_moment(law15, 1.0, 0.5) == 0.0


def test_cap_for_tail_moment_meets_budget(law15):
    cap = cap_for_tail_moment(law15, 1.0, 1e-4)
    assert tail_moment(law15, 1.0, cap) == pytest.approx(1e-4, rel=1e-9)
    assert cap_for_tail_moment(law15, 1.0, 0.0) == math.inf


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def test_samples_respect_support(law15, rng):
    u = sample_edge(law15, rng, size=10_000)
    assert u.min() >= law15.u_min


def test_capped_samples_respect_cap(law15, rng):
    u = sample_edge(law15, rng, size=10_000, cap=5.0)
    assert u.max() <= 5.0
    assert u.min() >= law15.u_min


def test_sample_mean_of_finite_variance_law(law25, rng):
    u = sample_edge(law25, rng, size=200_000)
    assert u.mean() == pytest.approx(moment(law25, 1.0), rel=0.03)


def test_size_biased_mean(law15, rng):
    """Density ∝ u·f(u) on [u_min, cap] has mean E[u²;≤cap]/E[u;≤cap]."""
    cap = 100.0
    u = sample_size_biased(law15, 1, cap, rng, 100_000)
    assert u.min() >= law15.u_min and u.max() <= cap
    expected = partial_moment(law15, 2.0, cap) / partial_moment(law15, 1.0, cap)
    assert u.mean() == pytest.approx(expected, rel=0.05)


def test_size_biased_needs_cap_above_tail_index(law15, rng):
    with pytest.raises(DomainError, match="finite cap"):
        sample_size_biased(law15, 2, math.inf, rng, 10)


# ---------------------------------------------------------------------------
# Limit constants
# ---------------------------------------------------------------------------

def test_d_constant_closed_form():
    d = d_constant(1.5)
    assert d.real == pytest.approx(-1.671086, abs=1e-5)
    assert d.imag == pytest.approx(-1.671086, abs=1e-5)


def test_d_constant_domain():
    with pytest.raises(DomainError):
        d_constant(2.0)
    with pytest.raises(DomainError):
        d_constant(1.0)


def test_limit_constants(law25):
    lc = limit_constants(1.5, 2.5, law25)
    assert lc.c_gamma1 == pytest.approx(1.4082, abs=1e-3)
    assert lc.c2 == pytest.approx(moment(law25, 1.5) ** (1 / 1.5))
    assert lc.c_gamma1_gamma2 == pytest.approx(lc.c_gamma1 * lc.c2)
    assert lc.v2 == pytest.approx(moment(law25, 2.0))
    assert lc.v1 is None


def test_limit_constants_need_ordered_indices(law15):
    with pytest.raises(DomainError, match="γ₁ < γ₂"):
        limit_constants(1.5, 1.5, law15)


def test_limit_constants_check_width_law(law25):
    with pytest.raises(DomainError, match="width law"):
        limit_constants(1.5, 3.0, law25)
