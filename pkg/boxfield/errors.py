"""
Exception hierarchy for boxfield.

Every error carries the process exit code the CLI reports for it:

    2  configuration, domain or budget problem (the request itself is wrong)
    3  a regime hypothesis or measure-space membership is violated
    4  numerical failure or broken internal contract
"""

from __future__ import annotations


class BoxfieldError(Exception):
    """Base class for all boxfield errors."""

    exit_code = 4


class ConfigError(BoxfieldError):
    """Invalid, missing or unknown configuration."""

    exit_code = 2


class DomainError(BoxfieldError, ValueError):
    """A parameter lies outside the domain of an operation."""

    exit_code = 2


class DivergentMomentError(DomainError):
    """Requested moment order is at or above the tail index."""


class UndefinedSkewnessError(DomainError):
    """Skewness of a zero measure was requested."""


class UnsupportedOperationError(BoxfieldError):
    """The operation is not available for this measure or mode."""

    exit_code = 2


class BudgetError(BoxfieldError):
    """A run would exceed a configured resource budget."""

    exit_code = 2

    def __init__(self, message: str, required: float | None = None, budget: float | None = None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class RegimeConstraintError(BoxfieldError):
    """A scaling-regime hypothesis fails; the message names the inequality."""

    exit_code = 3


class MembershipError(RegimeConstraintError):
    """The measure is not in the space required by the regime."""


class QuadratureError(BoxfieldError):
    """Refinement did not reach the requested tolerance."""

    exit_code = 4

    def __init__(self, message: str, best_estimate=None, error_bound: float | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_bound = error_bound


class ContractError(BoxfieldError):
    """A field was evaluated under a plan it was not sampled from."""

    exit_code = 4
