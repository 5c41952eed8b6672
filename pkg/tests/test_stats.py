"""
Tests for empirical characteristic functions, distances and edge-integral checks.
Run with: pytest tests/test_stats.py
"""

import math

import numpy as np
import pytest
from scipy import stats as sp_stats

from boxfield.errors import DomainError
from boxfield.limits import LawKind, LimitLaw
from boxfield.stats import (
    cf_distance,
    default_t_grid,
    empirical_cf,
    ks_distance,
    lemma_ratio_check,
    median_of_means,
    min_power,
    parse_t_grid,
    robust_scale,
    truncated_min_power_family,
    vanishing_integral_check,
)


# ---------------------------------------------------------------------------
# Empirical CF
# ---------------------------------------------------------------------------

def test_empirical_cf_of_point_mass():
    values = empirical_cf(np.full(10, 2.0), np.array([0.0, 1.0]))
    assert values[0] == pytest.approx(1.0)
    assert values[1] == pytest.approx(complex(math.cos(2.0), math.sin(2.0)))


def test_empirical_cf_scalar_argument():
    assert isinstance(empirical_cf([1.0, -1.0], 0.5), complex)
    assert empirical_cf([1.0, -1.0], 0.5) == pytest.approx(math.cos(0.5))


def test_empty_sample_rejected():
    with pytest.raises(DomainError, match="empty"):
        empirical_cf([], 1.0)


def test_robust_scale_of_normal(rng):
    assert robust_scale(rng.normal(0.0, 3.0, 20_000)) == pytest.approx(3.0, rel=0.05)


def test_robust_scale_falls_back():
    assert robust_scale([0.0, 0.0, 0.0, 0.0, 10.0]) == pytest.approx(4.0)
    assert robust_scale([5.0, 5.0]) == 1.0


def test_default_t_grid_scales_with_sample(rng):
    grid = default_t_grid(rng.normal(0.0, 2.0, 5000), points=11)
    assert grid.shape == (11,)
    assert grid[-1] == pytest.approx(2.5, rel=0.1)
    assert grid[0] == -grid[-1]


def test_parse_t_grid():
    np.testing.assert_allclose(parse_t_grid("-1:1:5"), [-1.0, -0.5, 0.0, 0.5, 1.0])
    with pytest.raises(DomainError):
        parse_t_grid("1,2,3")
    with pytest.raises(DomainError):
        parse_t_grid("0:inf:3")


# ---------------------------------------------------------------------------
# CF distance
# ---------------------------------------------------------------------------

class TestCfDistance:
    def test_normal_sample_passes_against_its_law(self, rng):
        law = LimitLaw(LawKind.GAUSSIAN, variance=1.0)
        result = cf_distance(rng.normal(size=4000), law, np.linspace(-3, 3, 21), band_factor=4.0)
        assert result.passed
        assert result.verdict == "PASS"
        assert result.mc_band == pytest.approx(4.0 / math.sqrt(4000))

    def test_shifted_sample_fails(self, rng):
        law = LimitLaw(LawKind.GAUSSIAN, variance=1.0)
        result = cf_distance(rng.normal(2.0, 1.0, size=4000), law, np.linspace(-3, 3, 21))
        assert not result.passed
        assert result.verdict == "FAIL"
        assert result.max_abs_gap > 0.5

    def test_threshold_adds_budgets(self, rng):
        result = cf_distance(rng.normal(size=100), lambda t: math.exp(-t * t / 2), [0.5],
                             band_factor=2.0, quad_tol=0.01, trunc_budget=0.02)
        assert result.threshold == pytest.approx(0.2 + 0.03)

    def test_precomputed_reference(self):
        grid = np.array([0.0, 1.0])
        result = cf_distance([0.0, 0.0], np.array([1.0, 1.0]), grid)
        assert result.max_abs_gap == pytest.approx(0.0)

    def test_reference_shape_mismatch(self):
        with pytest.raises(DomainError, match="t-grid"):
            cf_distance([0.0, 1.0], np.ones(3), np.array([0.0, 1.0]))

    def test_describe(self, rng):
        result = cf_distance(rng.normal(size=50), LimitLaw(LawKind.GAUSSIAN, variance=1.0), [0.0, 1.0])
        out = result.describe()
        assert out["samples"] == 50
        assert len(out["empirical"]) == 2
        assert out["empirical"][0] == pytest.approx([1.0, 0.0])


# ---------------------------------------------------------------------------
# KS
# ---------------------------------------------------------------------------

class TestKs:
    def test_one_sample(self, rng):
        result = ks_distance(rng.normal(size=2000), sp_stats.norm.cdf)
        assert result.statistic < 2 * result.critical
        assert result.critical == pytest.approx(1.628 / math.sqrt(2000))

    def test_two_sample_detects_shift(self, rng):
        result = ks_distance(rng.normal(size=2000), rng.normal(0.5, 1.0, size=2000))
        assert not result.passed
        assert result.m == 2000


# ---------------------------------------------------------------------------
# Edge-integral asymptotics
# ---------------------------------------------------------------------------

class TestEdgeIntegrals:
    def test_min_power(self):
        np.testing.assert_allclose(min_power(np.array([0.5, 2.0])), [0.25, 2.0])

    def test_ratio_tends_to_one(self):
        report = lemma_ratio_check()
        assert report.monotone
        assert report.ratios[-1] == pytest.approx(1.0, abs=0.02)
        assert np.all(report.ratios <= 1.0 + 1e-9)

    def test_zero_integrand(self):
        report = lemma_ratio_check((lambda u: 0.0, min_power))
        assert report.zero_integrand
        np.testing.assert_array_equal(report.ratios, np.ones(4))

    def test_truncated_family_vanishes(self):
        values = vanishing_integral_check()
        assert np.all(np.diff(values) < 0)
        assert values[-1] < values[0] / 2

    def test_truncated_family_support(self):
        g1, _ = truncated_min_power_family(0.01)
        assert g1(0.2) == 0.0
        assert g1(0.05) > 0.0


def test_median_of_means_resists_outlier():
    x = np.concatenate([np.zeros(99), [1e6]])
    assert median_of_means(x, groups=10) == 0.0
