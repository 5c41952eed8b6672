"""
Tests for the regime limit laws and their self-similarity.
Run with: pytest tests/test_limits.py
"""

import math

import numpy as np
import pytest

from boxfield.errors import DomainError, MembershipError, RegimeConstraintError
from boxfield.limits import (
    LawKind,
    LimitLaw,
    aggregate_scale,
    cf_curvature,
    cf_intermediate,
    cf_poisson_lines,
    curvature_profile,
    limit_law,
    sample_compensated_poisson,
    sample_stable,
    self_similarity_index,
    stable_cf,
    stable_limit,
    variance_finite,
    variance_gaussian_lines,
    variance_high,
)
from boxfield.measures import dilate, parse_measure
from boxfield.process import Regime
from boxfield.stats import empirical_cf
from boxfield.tails import edge_law


# ---------------------------------------------------------------------------
# Limit laws
# ---------------------------------------------------------------------------

class TestLimitLaw:
    def test_gaussian_cf(self):
        law = LimitLaw(LawKind.GAUSSIAN, variance=2.0)
        assert law.cf(1.0) == pytest.approx(math.exp(-1.0))
        assert law.cf(np.array([0.0, 1.0])).shape == (2,)

    def test_invalid_parameters(self):
        with pytest.raises(DomainError):
            LimitLaw(LawKind.GAUSSIAN, variance=-1.0)
        with pytest.raises(DomainError):
            LimitLaw(LawKind.STABLE, alpha=2.5, sigma=1.0, beta=0.0)
        with pytest.raises(DomainError):
            LimitLaw(LawKind.CF_ORACLE)

    def test_finite_variance_limit(self, laplace, small_plans):
        law = limit_law(small_plans[Regime.FINITE_VARIANCE], laplace)
        assert law.kind is LawKind.GAUSSIAN
        assert law.variance == pytest.approx(1.0, rel=1e-9)
        assert variance_finite(laplace, laplace) == pytest.approx(1.0, rel=1e-9)

    def test_high_limit_is_gaussian(self, laplace, small_plans):
        law = limit_law(small_plans[Regime.HIGH], laplace)
        assert law.kind is LawKind.GAUSSIAN
        assert law.variance > 0
        assert law.describe()["regime"] == "high"

    def test_intermediate_limit_is_an_oracle(self, laplace, small_plans):
        law = limit_law(small_plans[Regime.INTERMEDIATE], laplace)
        assert law.kind is LawKind.CF_ORACLE
        assert law.cf(0.0) == 1

    @pytest.mark.slow
    def test_intermediate_oracle_accepts_combinations(self, combo, small_plans):
        law = limit_law(small_plans[Regime.INTERMEDIATE], combo, cf_tol=1e-3)
        up, down = complex(law.cf(0.5)), complex(law.cf(-0.5))
        assert law.cf(0.0) == 1
        assert abs(up) <= 1.0 + 1e-12
        assert up == pytest.approx(down.conjugate(), abs=1e-12)

    def test_points_limit(self, laplace, small_plans):
        law = limit_law(small_plans[Regime.POINTS], laplace)
        assert law.kind is LawKind.STABLE
        assert law.alpha == 1.3
        assert law.beta == 1.0

    def test_points_limit_needs_density(self, square, small_plans):
        with pytest.raises(MembershipError):
            limit_law(small_plans[Regime.POINTS], square)

    def test_stable_limit_laplace(self, laplace):
        law = stable_limit(laplace, 1.5, 2.5)
        assert law.sigma == pytest.approx(1.46752, abs=1e-5)
        assert law.beta == 1.0

    def test_index_hypotheses(self, laplace):
        with pytest.raises(RegimeConstraintError):
            variance_high(laplace, laplace, 1.3, 2.5)
        with pytest.raises(RegimeConstraintError):
            stable_limit(laplace, 2.2, 2.5)


# ---------------------------------------------------------------------------
# Stable laws
# ---------------------------------------------------------------------------

class TestStable:
    def test_cf_modulus(self):
        t = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        values = stable_cf(t, 1.5, 1.2, 0.7)
        np.testing.assert_allclose(np.abs(values), np.exp(-(1.2 * np.abs(t)) ** 1.5), rtol=1e-12)
        assert values[2] == 1

    def test_cf_hermitian(self):
        assert stable_cf(-0.8, 1.5, 1.0, 1.0) == pytest.approx(np.conj(stable_cf(0.8, 1.5, 1.0, 1.0)))

    def test_sampler_matches_cf(self):
        rng = np.random.default_rng(7)
        x = sample_stable(1.5, 1.0, 0.5, rng, size=20_000)
        t = np.array([0.3, 0.7, 1.2])
        gaps = np.abs(empirical_cf(x, t) - stable_cf(t, 1.5, 1.0, 0.5))
        assert gaps.max() < 0.03

    def test_degenerate_scale(self, rng):
        np.testing.assert_array_equal(sample_stable(1.5, 0.0, 0.0, rng, size=4), np.zeros(4))

    def test_sampler_domain(self, rng):
        with pytest.raises(DomainError):
            sample_stable(1.5, 1.0, 1.5, rng)
        with pytest.raises(DomainError):
            sample_stable(2.0, 1.0, 0.0, rng)


# ---------------------------------------------------------------------------
# Self-similarity
# ---------------------------------------------------------------------------

class TestSelfSimilarity:
    def test_indices(self):
        assert self_similarity_index("high", 1.3, 1.6) == pytest.approx(-0.45)
        assert self_similarity_index("gaussian_lines", 1.3, 2.5) == pytest.approx(-0.65)
        assert self_similarity_index("finite_variance", 3.0, 3.0) == -1.0
        assert self_similarity_index("points", 1.5, 2.5) == pytest.approx(2 / 1.5 - 2)
        assert self_similarity_index("intermediate", 1.3, 1.6) is None
        assert self_similarity_index("poisson_lines", 1.3, 2.5) is None

    def test_high_variance_under_dilation(self, laplace):
        base = variance_high(laplace, laplace, 1.3, 1.6)
        scaled = variance_high(dilate(laplace, 2.0), dilate(laplace, 2.0), 1.3, 1.6)
        assert scaled / base == pytest.approx(2.0 ** (2 - 2.9), rel=1e-5)

    def test_gaussian_lines_variance_under_dilation(self, laplace, law25):
        base = variance_gaussian_lines(laplace, 1.3, law25)
        scaled = variance_gaussian_lines(dilate(laplace, 3.0), 1.3, law25)
        assert scaled / base == pytest.approx(3.0 ** -1.3, rel=1e-5)

    def test_finite_variance_under_dilation(self, laplace):
        scaled = variance_finite(dilate(laplace, 2.0), dilate(laplace, 2.0))
        assert scaled == pytest.approx(2.0 ** -2 * variance_finite(laplace, laplace))

    def test_aggregate_scale(self):
        assert aggregate_scale("high", 1.3, 1.6, 4.0) == pytest.approx(4.0 ** (1 / (2 - 2.9)))
        assert aggregate_scale("finite_variance", 3.0, 3.0, 4.0) == pytest.approx(0.5)
        assert aggregate_scale("poisson_lines", 1.3, 2.5, 4.0) is None
        with pytest.raises(DomainError):
            aggregate_scale("high", 1.3, 1.6, 0.0)

    def test_aggregate_scale_inverts_index(self):
        """a_m^{2H} = m for the Gaussian limits."""
        for regime, g1, g2 in (("high", 1.3, 1.6), ("gaussian_lines", 1.3, 2.5)):
            a = aggregate_scale(regime, g1, g2, 5.0)
            h = self_similarity_index(regime, g1, g2)
            assert a ** (2 * h) == pytest.approx(5.0)


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

def test_curvature_recovers_variance():
    law = LimitLaw(LawKind.GAUSSIAN, variance=1.7)
    assert cf_curvature(law.cf, 1e-2) == pytest.approx(1.7, rel=1e-6)


def test_curvature_grows_for_infinite_variance():
    profile = curvature_profile(lambda t: complex(stable_cf(t, 1.5, 1.0, 0.0)), [1e-1, 1e-2, 1e-3])
    assert profile[0] < profile[1] < profile[2]


class TestCurvatureMatchesVariance:
    """−φ''(0) of the limit CF oracles against the covariance integrals."""

    def test_intermediate_cf(self, laplace):
        variance = variance_high(laplace, laplace, 1.3, 1.6)
        h = 0.05 / math.sqrt(variance)
        assert cf_curvature(lambda t: cf_intermediate(laplace, 1.3, 1.6, t), h) == pytest.approx(variance, rel=1e-2)

    def test_poisson_lines_cf(self, laplace, law25):
        variance = variance_gaussian_lines(laplace, 1.3, law25)
        h = 0.05 / math.sqrt(variance)
        curvature = cf_curvature(lambda t: cf_poisson_lines(laplace, 1.3, law25, t), h)
        assert curvature == pytest.approx(variance, rel=1e-2)

    @pytest.mark.slow
    def test_intermediate_cf_of_cancelling_pair(self):
        dipole = parse_measure("combo:1.0*laplace:c=1;-1.0*laplace:c=1,x=1")
        variance = variance_high(dipole, dipole, 1.3, 1.6)
        h = 0.05 / math.sqrt(variance)
        curvature = cf_curvature(lambda t: cf_intermediate(dipole, 1.3, 1.6, t, tol=1e-3), h)
        assert curvature == pytest.approx(variance, rel=2e-2)

    @pytest.mark.slow
    def test_poisson_lines_cf_of_combination(self, combo, law25):
        variance = variance_gaussian_lines(combo, 1.3, law25)
        h = 0.05 / math.sqrt(variance)
        curvature = cf_curvature(lambda t: cf_poisson_lines(combo, 1.3, law25, t, tol=1e-3), h)
        assert curvature == pytest.approx(variance, rel=2e-2)


# ---------------------------------------------------------------------------
# Brute-force grid oracles
# ---------------------------------------------------------------------------

def _laplace_cdf(s):
    """∫_{−∞}^s e^{−|r|} dr."""
    return np.where(s < 0.0, np.exp(np.minimum(s, 0.0)), 2.0 - np.exp(-np.maximum(s, 0.0)))


def _window_energy(u: float) -> float:
    x, dx = np.linspace(-u - 25.0, 25.0, 4000, retstep=True)
    window = _laplace_cdf(x + u) - _laplace_cdf(x)
    return float(np.sum(window ** 2)) * dx


def _window_power_integral(gamma: float) -> float:
    """∫∫ (∫_x^{x+u} e^{−|r|} dr)² dx u^{−γ−1} du by a Riemann sum in (log u, x).

    Below e^{−10} the window is u·e^{−|x|}; above e^{6} its energy grows by 4 per unit of u.
    """
    ds = 0.01
    total = 0.0
    for s in np.arange(-10.0, 6.0, ds) + ds / 2.0:
        total += _window_energy(math.exp(s)) * math.exp(-gamma * s) * ds
    eps, top = math.exp(-10.0), math.exp(6.0)
    total += eps ** (2.0 - gamma) / (2.0 - gamma)
    total += _window_energy(top) * top ** -gamma / gamma + 4.0 * top ** (1.0 - gamma) / (gamma * (gamma - 1.0))
    return total


class TestGridOracles:
    def test_high_covariance(self, laplace):
        expected = _window_power_integral(1.3) * _window_power_integral(1.6)
        assert variance_high(laplace, laplace, 1.3, 1.6) == pytest.approx(expected, rel=1e-2)

    def test_gaussian_lines_variance(self, laplace):
        law2 = edge_law(3.5)
        ds = 1e-3
        s = math.log(law2.u_min) + np.arange(0.0, 60.0, ds) + ds / 2.0
        second_moment = float(np.sum(law2.tail_constant * np.exp((2.0 - law2.gamma) * s))) * ds
        # ∫e^{−2|x₂|}dx₂ = 1 for the cross-section of laplace(C=1, c=1)
        expected = second_moment * _window_power_integral(1.5)
        assert variance_gaussian_lines(laplace, 1.5, law2) == pytest.approx(expected, rel=1e-2)


# ---------------------------------------------------------------------------
# Compensated Poisson samplers
# ---------------------------------------------------------------------------

class TestCompensated:
    def test_box_jumps(self, laplace):
        sample = sample_compensated_poisson("intermediate", laplace, 1.3, 1.6, cut=0.5, replicates=30, seed=3)
        assert sample.values.shape == (30,)
        assert np.all(np.isfinite(sample.values))
        assert sample.small_jump_variance > 0
        assert sample.describe()["count"] == 30

    def test_line_jumps(self, laplace):
        sample = sample_compensated_poisson("poisson_lines", laplace, 1.3, 2.5, cut=0.5, replicates=20, seed=3)
        assert sample.values.shape == (20,)
        assert math.isfinite(sample.small_jump_variance)

    def test_line_jumps_ignore_thread_count(self, laplace):
        args = ("poisson_lines", laplace, 1.3, 2.5)
        serial = sample_compensated_poisson(*args, cut=0.5, replicates=12, seed=9, threads=1)
        pooled = sample_compensated_poisson(*args, cut=0.5, replicates=12, seed=9, threads=3)
        assert np.array_equal(serial.values, pooled.values)

    def test_cut_range(self, laplace):
        with pytest.raises(DomainError):
            sample_compensated_poisson("intermediate", laplace, 1.3, 1.6, cut=2.0, replicates=2, seed=0)

    def test_other_regimes_rejected(self, laplace):
        with pytest.raises(DomainError):
            sample_compensated_poisson("points", laplace, 1.3, 2.5, cut=0.5, replicates=2, seed=0)
