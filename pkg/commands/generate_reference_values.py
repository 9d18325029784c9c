"""
Regenerate the reference numbers used by the test-suite from closed forms only
(no quadrature, no root finding beyond the one-dimensional oracle equations).

Usage: python commands/generate_reference_values.py [scenario.ini]
"""

import math
import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.config.scenario_loader import load_scenario  # noqa: E402
from app.engines.crra_oracle_engine import (  # noqa: E402
    CrraScenario,
    crra_free_boundary,
    crra_gamma_IB,
    crra_xi_uA,
    crra_xi_uB,
)
from app.schemas.market_schemas import MarketParams  # noqa: E402

REF1_MARKET = MarketParams(r=0.02, mu=0.07, sigma=0.20, rho=0.03, epsilon=1.0)
REF1_PREFERENCES = {"gamma": 2.0, "l": 0.5, "k": 1.0, "b": 0.0}


def reference_values(
    market: MarketParams, gamma: float, l: float, k: float, b: float
) -> dict:
    scenario = CrraScenario.build(market, gamma, l, k, b)
    boundary = crra_free_boundary(scenario)
    n1, n2 = scenario.roots.n1, scenario.roots.n2
    z_R = boundary.z_R
    eps = market.epsilon
    working_at_one = boundary.D + crra_xi_uB(scenario, 1.0) + eps / market.r

    # portfolio jump -(2/(mu - r)) Psi(z_R), Psi from the conjugates
    psi = (scenario.G * z_R**scenario.q - l - _conjugate_A(scenario, z_R)) / z_R + eps
    values = {
        "n1": n1,
        "n2": n2,
        "M": scenario.M,
        "case": boundary.case,
        "z_bar": boundary.z_bar,
        "z_R": z_R,
        "D": boundary.D,
        "x_R": boundary.x_R,
        "xi_u_B(1)": crra_xi_uB(scenario, 1.0),
        "gamma_I_B(1)": crra_gamma_IB(scenario, 1.0),
        "J(1)": working_at_one if z_R < 1.0 else crra_xi_uA(scenario, 1.0),
        "P(1)": working_at_one - crra_xi_uA(scenario, 1.0) if z_R < 1.0 else 0.0,
        "portfolio_jump": -2.0 / (market.mu - market.r) * psi,
        "retired_consumption_at_z_R": (z_R / k) ** (-1.0 / gamma) / k - b / k,
    }
    if boundary.D_display is not None:
        values["D_printed_display"] = boundary.D_display
    return values


def _conjugate_A(scenario: CrraScenario, y: float) -> float:
    """u~_A(y) = u~(y/k) + b y/k below the cutoff, u(b) above."""
    if y > scenario.cutoff:
        return scenario.floor_utility
    z = y / scenario.k
    return scenario.G * z**scenario.q + scenario.b * z


if __name__ == "__main__":
    if len(sys.argv) > 2:
        print("Usage: python commands/generate_reference_values.py [scenario.ini]")
        sys.exit(1)
    if len(sys.argv) == 2:
        config = load_scenario(sys.argv[1])
        market = config.market
        prefs = config.preferences.model_dump(exclude={"kind"})
    else:
        market, prefs = REF1_MARKET, REF1_PREFERENCES

    for key, value in reference_values(market, **prefs).items():
        if isinstance(value, float) and math.isfinite(value):
            print(f"{key:<28} {value:.17g}")
        else:
            print(f"{key:<28} {value}")
