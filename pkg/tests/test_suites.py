"""
Tests for the named acceptance suites.
Run with: pytest tests/test_suites.py
"""

import pytest

from boxfield.config import validate_config
from boxfield.errors import BudgetError, ConfigError
from boxfield.process import Regime, truncation_budget
from boxfield.suites import (
    DESK_RHO,
    FINITE_VARIANCE_LAMBDA,
    LADDER_RHOS,
    SUITES,
    CheckResult,
    SuiteReport,
    desk_candidates,
    desk_plan,
    figure_plans,
    run_suite,
)


@pytest.fixture
def cfg():
    return validate_config({"run": {"seed": 17}, "suite": {"replicates": 200}})


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class TestSuiteReport:
    def test_all_checks_must_pass(self):
        report = SuiteReport("x", [CheckResult("a", True), CheckResult("b", False)])
        assert not report.passed
        assert report.verdict == "FAIL"

    def test_empty_suite_does_not_pass(self):
        assert not SuiteReport("x").passed

    def test_describe(self):
        report = SuiteReport("x", [CheckResult("a", True, {"v": 1}, 0.1234)])
        out = report.describe()
        assert out["verdict"] == "PASS"
        assert out["checks"][0] == {"name": "a", "passed": True, "values": {"v": 1}, "seconds": 0.123}

    def test_error_is_reported(self):
        assert CheckResult("a", False, error="QuadratureError: boom").describe()["error"].startswith("Quadrature")


# ---------------------------------------------------------------------------
# Suite registry
# ---------------------------------------------------------------------------

def test_known_suites():
    assert {"regimes-smoke", "constants", "invariants", "lemma", "oracle", "ladder",
            "points-ks", "finite-variance", "figure", "determinism"} == set(SUITES)


def test_unknown_suite(cfg):
    with pytest.raises(ConfigError, match="unknown suite"):
        run_suite("nope", cfg)


def test_desk_plans_cover_every_regime():
    for regime in Regime:
        assert desk_plan(regime).regime is regime
        assert desk_plan(regime, full=True).rho <= desk_plan(regime).rho


def test_figure_plans():
    plans = figure_plans()
    assert plans["lines"].regime is Regime.POISSON_LINES
    assert plans["isotropic"].regime is Regime.FINITE_VARIANCE


# ---------------------------------------------------------------------------
# Quick suites
# ---------------------------------------------------------------------------

def test_constants_suite(cfg):
    report = run_suite("constants", cfg)
    assert report.passed, report.describe()
    assert len(report.checks) == 5


def test_lemma_suite(cfg):
    report = run_suite("lemma", cfg)
    assert report.passed, report.describe()


@pytest.mark.integration
def test_determinism_suite(cfg):
    report = run_suite("determinism", cfg)
    assert report.passed, report.describe()


@pytest.mark.integration
def test_smoke_suite(cfg):
    report = run_suite("regimes-smoke", cfg)
    assert [c.name for c in report.checks] == [f"smoke/{r.value}" for r in Regime]
    assert report.passed, report.describe()


@pytest.mark.slow
def test_invariants_suite(cfg):
    report = run_suite("invariants", cfg)
    assert report.passed, report.describe()


# ---------------------------------------------------------------------------
# Desk instances under the box budget
# ---------------------------------------------------------------------------

class TestDeskCandidates:
    def test_full_runs_start_at_the_desk_instance(self):
        assert [p.rho for p in desk_candidates(Regime.HIGH, full=True)] == [DESK_RHO, 3e-2, 1e-1, 0.3]
        assert [p.rho for p in desk_candidates(Regime.POINTS)] == [0.3]

    def test_finite_variance_backs_off_in_intensity(self):
        plans = desk_candidates(Regime.FINITE_VARIANCE, full=True)
        assert [p.lambda_rho for p in plans] == [FINITE_VARIANCE_LAMBDA, 1e3, 1e2]
        assert {p.rho for p in plans} == {DESK_RHO}

    def test_high_desk_instance_exceeds_default_budget(self, laplace):
        with pytest.raises(BudgetError) as info:
            truncation_budget(desk_plan(Regime.HIGH, full=True), laplace)
        assert info.value.required > info.value.budget


# ---------------------------------------------------------------------------
# Acceptance suites
# ---------------------------------------------------------------------------

@pytest.mark.slow
class TestAcceptanceSuites:
    def test_oracle(self, cfg):
        report = run_suite("oracle", cfg)
        assert [c.name for c in report.checks] == [f"oracle/{r.value}" for r in Regime]
        assert report.passed, report.describe()

    def test_ladder(self, cfg):
        report = run_suite("ladder", cfg)
        assert len(report.checks) == 6
        for check in report.checks[:-1]:
            assert check.error is None, check.describe()
            gaps = check.values["max_gap"]
            assert len(gaps) == len(LADDER_RHOS)
            assert gaps[-1] <= gaps[0]
        ratios = report.checks[-1].values["variance_ratio"]
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0) + 1e-9

    def test_points_ks(self, cfg):
        check = run_suite("points-ks", cfg).checks[0]
        assert check.error is None, check.describe()
        assert check.values["indicator"] == pytest.approx(0.3)
        assert 0.0 <= check.values["statistic"] <= 1.0

    def test_finite_variance(self, cfg):
        prelimit, empirical = run_suite("finite-variance", cfg).checks
        assert prelimit.passed, prelimit.describe()
        assert prelimit.values["plan"]["lambda_rho"] == FINITE_VARIANCE_LAMBDA
        assert empirical.error is None, empirical.describe()
        assert abs(empirical.values["variance"] - 1.0) <= 0.5
        if empirical.values["plan"]["lambda_rho"] != FINITE_VARIANCE_LAMBDA:
            assert "exceeds the budget" in empirical.values["budget_refusal"]

    def test_figure(self, cfg):
        lines, isotropic, agreement = run_suite("figure", cfg).checks
        assert lines.values["anisotropy"] > isotropic.values["anisotropy"]
        assert lines.passed and isotropic.passed, (lines.describe(), isotropic.describe())
        assert agreement.error is None
