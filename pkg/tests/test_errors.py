"""
Tests for the exception hierarchy and its exit codes.
Run with: pytest tests/test_errors.py
"""

import pytest

from boxfield.errors import (
    BoxfieldError,
    BudgetError,
    ConfigError,
    ContractError,
    DivergentMomentError,
    DomainError,
    MembershipError,
    QuadratureError,
    RegimeConstraintError,
    UndefinedSkewnessError,
    UnsupportedOperationError,
)


@pytest.mark.parametrize("cls, code", [
    (ConfigError, 2),
    (DomainError, 2),
    (DivergentMomentError, 2),
    (UndefinedSkewnessError, 2),
    (UnsupportedOperationError, 2),
    (BudgetError, 2),
    (RegimeConstraintError, 3),
    (MembershipError, 3),
    (QuadratureError, 4),
    (ContractError, 4),
])
def test_exit_codes(cls, code):
    assert cls("x").exit_code == code
    assert issubclass(cls, BoxfieldError)


def test_domain_error_is_value_error():
    assert issubclass(DomainError, ValueError)


def test_membership_is_regime_constraint():
    with pytest.raises(RegimeConstraintError):
        raise MembershipError("not in M_P")


def test_quadrature_error_carries_best_estimate():
    err = QuadratureError("no convergence", best_estimate=0.5 + 0.1j, error_bound=1e-3)
    assert err.best_estimate == 0.5 + 0.1j
    assert err.error_bound == 1e-3
    assert str(err) == "no convergence"


def test_budget_error_carries_sizes():
    err = BudgetError("too many boxes", required=3e7, budget=2e6)
    assert err.required > err.budget
