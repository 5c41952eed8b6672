"""
Shared fixtures for all tests.

Provides:
- Canonical measures (Laplace, Gaussian, indicator, combination)
- Unit-tail edge laws
- Seeded generators
- Small plans for every regime
- An isolated run directory for CLI tests
"""

import numpy as np
import pytest

from boxfield.config import reset_config_cache
from boxfield.measures import parse_measure
from boxfield.process import Regime, plan_regime
from boxfield.tails import edge_law


@pytest.fixture
def laplace():
    """f(x) = exp(−|x₁| − |x₂|)"""
    return parse_measure("laplace:C=1,c=1")


@pytest.fixture
def gauss():
    return parse_measure("gauss:A=1,w=1")


@pytest.fixture
def square():
    return parse_measure("box:-1,-1,1,1")


@pytest.fixture
def combo():
    return parse_measure("combo:1.0*laplace:c=1;-0.5*box:0,0,1,1")


@pytest.fixture
def law15():
    return edge_law(1.5)


@pytest.fixture
def law25():
    return edge_law(2.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_plans():
    """One coarse instance per regime; cheap enough to simulate in unit tests."""
    return {
        Regime.HIGH: plan_regime("high", 1.3, 1.6, 0.3, delta=0.3),
        Regime.INTERMEDIATE: plan_regime("intermediate", 1.3, 1.6, 0.3),
        Regime.GAUSSIAN_LINES: plan_regime("gaussian_lines", 1.3, 2.5, 0.3, eta=0.5),
        Regime.POISSON_LINES: plan_regime("poisson_lines", 1.3, 2.5, 0.3),
        Regime.POINTS: plan_regime("points", 1.3, 2.5, 0.3, delta=0.3),
        Regime.FINITE_VARIANCE: plan_regime("finite_variance", 3.0, 3.0, 0.3, lambda_rho=100.0),
    }


@pytest.fixture
def run_dir(tmp_path, monkeypatch):
    """Isolated working directory; ledger and outputs land under tmp_path."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("BOXFIELD_CONFIG", raising=False)
    monkeypatch.delenv("BOXFIELD_SEED", raising=False)
    reset_config_cache()
    yield tmp_path
    reset_config_cache()


# ── Markers ──────────────────────────────────────────────────────────────

def pytest_configure(config):
    """Register custom markers"""
    config.addinivalue_line("markers", "integration: component integration tests")
    config.addinivalue_line("markers", "unit: unit tests (fast)")
    config.addinivalue_line("markers", "regression: regression tests")
    config.addinivalue_line("markers", "slow: desk-scale acceptance runs (minutes)")
