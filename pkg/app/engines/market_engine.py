"""
Market engine: characteristic roots of the dual generator and the Merton
constant.

The dual process Y_t = y e^{rho t} xi_t is a geometric Brownian motion with
drift (rho - r) and volatility theta; its resolvent is built from the two
roots of the characteristic quadratic below.
"""

from __future__ import annotations

import logging
import math

from app.schemas.market_schemas import MarketParams, MertonConstant, QuadraticRoots
from app.shared.errors import DegenerateMarketError, InvalidPreferenceError

logger = logging.getLogger(__name__)


def characteristic_polynomial(params: MarketParams, n: float) -> float:
    """(theta^2/2) n^2 + (rho - r - theta^2/2) n - rho."""
    half_var = 0.5 * params.theta**2
    return half_var * n * n + (params.rho - params.r - half_var) * n - params.rho


def solve_characteristic_roots(params: MarketParams) -> QuadraticRoots:
    """
    Both roots of the characteristic quadratic.

    The larger-magnitude root comes from the quadratic formula with the sign
    chosen to avoid cancellation; the other follows from the product of roots.
    """
    theta = params.theta
    if theta == 0.0:
        raise DegenerateMarketError(
            "Sharpe ratio is zero (mu == r): the characteristic equation is linear"
        )

    a = 0.5 * theta**2
    b = params.rho - params.r - a
    c = -params.rho
    # c < 0 < a, so the discriminant is strictly positive
    q = -0.5 * (b + math.copysign(math.sqrt(b * b - 4.0 * a * c), b))
    first = q / a
    second = c / q
    roots = QuadraticRoots(n1=max(first, second), n2=min(first, second))
    logger.debug(f"Characteristic roots: n1={roots.n1:.12g}, n2={roots.n2:.12g}")
    return roots


def merton_constant(params: MarketParams, gamma: float) -> MertonConstant:
    """M = r + (rho - r)/gamma + ((gamma - 1)/gamma^2)(theta^2/2)."""
    if not gamma > 0.0 or gamma == 1.0:
        raise InvalidPreferenceError(
            f"Risk aversion must be positive and different from 1, got {gamma}"
        )
    value = (
        params.r
        + (params.rho - params.r) / gamma
        + ((gamma - 1.0) / gamma**2) * 0.5 * params.theta**2
    )
    result = MertonConstant(gamma=gamma, value=value)
    if not result.is_positive:
        logger.warning(
            f"Merton constant is not positive: M={value:.6g} (gamma={gamma})"
        )
    return result
