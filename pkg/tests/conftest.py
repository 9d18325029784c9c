import os
import sys
from pathlib import Path
from typing import Callable

import pytest

# Ensure project root is importable before application modules are loaded
PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from app.engines.felicity_engine import PreferencePair, crra
from app.engines.market_engine import solve_characteristic_roots
from app.engines.resolvent_engine import ResolventKernel
from app.schemas.market_schemas import MarketParams

REF1_INI = """
[market]
r = 0.02
mu = 0.07
sigma = 0.20
rho = 0.03
epsilon = 1.0

[preferences]
kind = crra
gamma = 2
l = 0.5
k = 1
b = 0

[numerics]
probe_count = 200
table_count = 21
vi_probe_count = 16
"""


@pytest.fixture(scope="session", autouse=True)
def _configure_test_environment() -> None:
    """Set testing environment variables and reset cached configuration."""
    os.environ["PROJECT_NAME"] = "DualLife - Tests"
    os.environ["DEBUG"] = "false"
    os.environ["DUALLIFE_THREADS"] = "2"

    from app.config.settings import reload_settings

    reload_settings()
    yield
    reload_settings()


@pytest.fixture(scope="session")
def ref1_market() -> MarketParams:
    return MarketParams(r=0.02, mu=0.07, sigma=0.20, rho=0.03, epsilon=1.0)


@pytest.fixture(scope="session")
def ref1_roots(ref1_market):
    return solve_characteristic_roots(ref1_market)


@pytest.fixture(scope="session")
def ref1_pair() -> PreferencePair:
    return PreferencePair.from_example_family(crra(2.0), l=0.5, k=1.0, b=0.0)


@pytest.fixture(scope="session")
def ref1_kernel(ref1_market, ref1_roots) -> ResolventKernel:
    return ResolventKernel.from_market(ref1_market, ref1_roots, ())


@pytest.fixture(scope="session")
def ref1_policy(ref1_market, ref1_pair):
    """Fully solved REF1 scenario (roots, free boundary, dual, policy)."""
    from app.engines.policy_engine import build_policy

    return build_policy(ref1_market, ref1_pair)


@pytest.fixture(scope="session")
def ref1_solution(ref1_policy):
    return ref1_policy.solution


@pytest.fixture(scope="session")
def ref1_dual(ref1_policy):
    return ref1_policy.dual


@pytest.fixture
def write_scenario(tmp_path: Path) -> Callable[..., Path]:
    """Write an INI scenario into tmp_path and return its path."""

    def _write(text: str = REF1_INI, name: str = "scenario.ini") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def ref1_config():
    """REF1 scenario with reduced probe and table sizes."""
    from app.config.scenario_loader import parse_scenario

    return parse_scenario(REF1_INI, name="ref1")


@pytest.fixture
def runner():
    """Click test runner; result.output carries stdout and stderr."""
    from click.testing import CliRunner

    return CliRunner()


@pytest.fixture
def ref1_ini() -> str:
    return REF1_INI
