"""
CRRA oracle: closed forms for u(c) = c^{1-gamma}/(1-gamma) with
u_B = u - l and u_A = u(k c + b).

Everything here is algebra on power laws; no quadrature. It is the
independent reference the generic pipeline is checked against.

Notation: G = gamma/(1-gamma), q = 1 - 1/gamma (so u~(y) = G y^q),
cutoff c = k b^{-gamma} (infinite when b = 0). On nu <= c

    h(nu) = G (1 - k^{-q}) nu^q - l + (eps - b/k) nu

and on nu > c

    h(nu) = G nu^q - l - u(b) + eps nu.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from app.engines.market_engine import merton_constant, solve_characteristic_roots
from app.schemas.market_schemas import MarketParams, QuadraticRoots
from app.shared.errors import AssumptionViolationError, InvalidPreferenceError
from app.shared.helpers.root_helper import expand_bracket, find_root, solve_monotone

logger = logging.getLogger(__name__)

Terms = List[Tuple[float, float]]  # (coefficient, exponent) pairs of a power sum


@dataclass(frozen=True)
class CrraScenario:
    gamma: float
    l: float
    k: float
    b: float
    market: MarketParams
    roots: QuadraticRoots
    M: float
    cutoff: float

    @classmethod
    def build(
        cls, market: MarketParams, gamma: float, l: float, k: float, b: float
    ) -> "CrraScenario":
        if l < 0.0 or k < 1.0 or b < 0.0:
            raise InvalidPreferenceError(
                f"Need l >= 0, k >= 1, b >= 0 (got {l}, {k}, {b})"
            )
        merton = merton_constant(market, gamma)
        if not merton.is_positive:
            raise AssumptionViolationError(
                f"Merton constant M={merton.value:.6g} must be positive "
                f"for gamma={gamma}"
            )
        return cls(
            gamma=gamma,
            l=l,
            k=k,
            b=b,
            market=market,
            roots=solve_characteristic_roots(market),
            M=merton.value,
            cutoff=k * b ** (-gamma) if b > 0.0 else math.inf,
        )

    @property
    def G(self) -> float:
        return self.gamma / (1.0 - self.gamma)

    @property
    def q(self) -> float:
        return 1.0 - 1.0 / self.gamma

    @property
    def floor_utility(self) -> float:
        """u(b)."""
        return self.b ** (1.0 - self.gamma) / (1.0 - self.gamma)

    @property
    def prefactor(self) -> float:
        return 2.0 / (self.market.theta**2 * (self.roots.n1 - self.roots.n2))

    def low_terms(self) -> Terms:
        eps = self.market.epsilon
        return [
            (self.G * (1.0 - self.k ** (-self.q)), self.q),
            (-self.l, 0.0),
            (eps - self.b / self.k, 1.0),
        ]

    def high_terms(self) -> Terms:
        return [
            (self.G, self.q),
            (-self.l - self.floor_utility, 0.0),
            (self.market.epsilon, 1.0),
        ]


@dataclass(frozen=True)
class CrraFreeBoundary:
    case: int
    z_bar: float
    z_R: float
    D: float
    x_R: float
    gee_at_cutoff: Optional[float] = None
    D_display: Optional[float] = None
    display_mismatch: float = 0.0


# ---------------------------------------------------------------------
# Dual values
# ---------------------------------------------------------------------


def crra_xi_uB(scenario: CrraScenario, y: float) -> float:
    """(1/M) G y^q - l/rho."""
    return scenario.G * y**scenario.q / scenario.M - scenario.l / scenario.market.rho


def crra_gamma_IB(scenario: CrraScenario, y: float) -> float:
    """Gamma_{I_u}(y) = (1/M) y^{-1/gamma}."""
    return y ** (-1.0 / scenario.gamma) / scenario.M


def crra_xi_uA(scenario: CrraScenario, y: float) -> float:
    """phi_1 on (0, cutoff], phi_2 above."""
    if y <= scenario.cutoff:
        return _phi_1(scenario, y)
    return _phi_2(scenario, y)


def crra_retired_wealth(scenario: CrraScenario, y: float) -> float:
    """-d/dy Xi_{u~_A}(y)."""
    if y <= scenario.cutoff:
        return -_phi_1_prime(scenario, y)
    return -_phi_2_prime(scenario, y)


# ---------------------------------------------------------------------
# Free boundary
# ---------------------------------------------------------------------


def crra_labor_flow(scenario: CrraScenario, y: float) -> float:
    terms = scenario.low_terms() if y <= scenario.cutoff else scenario.high_terms()
    return sum(coef * y**power for coef, power in terms)


def crra_zbar(scenario: CrraScenario, *, rtol: float = 1e-14) -> float:
    return solve_monotone(
        lambda y: crra_labor_flow(scenario, y) / y, 1.0, increasing=True, rtol=rtol
    )


def crra_gee(scenario: CrraScenario, y: float) -> float:
    """G(y) = int_y^inf nu^{-n1-1} h(nu) d nu in closed form."""
    n1 = scenario.roots.n1
    c = scenario.cutoff
    if math.isinf(c):
        return -_low_bracket(scenario, y, n1)
    if y >= c:
        return -_high_bracket(scenario, y, n1)
    return (
        _low_bracket(scenario, c, n1)
        - _low_bracket(scenario, y, n1)
        - _high_bracket(scenario, c, n1)
    )


def crra_x_R(scenario: CrraScenario, z_R: float) -> float:
    return crra_retired_wealth(scenario, z_R)


def crra_free_boundary(
    scenario: CrraScenario, *, rtol: float = 1e-14
) -> CrraFreeBoundary:
    """
    Case 1 when G(cutoff) > 0 (z_R below the cutoff), Case 2 otherwise; b = 0
    is Case 1 with an infinite cutoff.
    """
    n2 = scenario.roots.n2
    K = scenario.prefactor
    c = scenario.cutoff
    z_bar = crra_zbar(scenario)

    def gee(y: float) -> float:
        return crra_gee(scenario, y)

    gee_at_cutoff = (
        None if math.isinf(c) else -_high_bracket(scenario, c, scenario.roots.n1)
    )
    case = 1 if gee_at_cutoff is None or gee_at_cutoff > 0.0 else 2

    if case == 1:
        hi = min(c, z_bar)
        lo, hi = expand_bracket(gee, 0.5 * hi, increasing=True, upper_cap=hi)
        z_R = find_root(gee, lo, hi, rtol=rtol)
        D = -K * _low_bracket(scenario, z_R, n2)
        D_display = None
        mismatch = 0.0
    else:
        z_R = c if gee_at_cutoff == 0.0 else find_root(gee, c, z_bar, rtol=rtol)
        # the printed display, with its "+-" before the last bracket read as "+"
        D_display = (
            -K * _low_bracket(scenario, c, n2)
            - K * _high_bracket(scenario, z_R, n2)
            + K * _high_bracket(scenario, c, n2)
        )
        D = -K * (
            _power_integral(scenario.low_terms(), 0.0, c, n2)
            + _power_integral(scenario.high_terms(), c, z_R, n2)
        )
        mismatch = abs(D_display - D) / max(1.0, abs(D))
        if mismatch > 1e-6:
            logger.warning(
                f"Case 2 display for D gives {D_display:.12g}, split integral {D:.12g}"
            )

    result = CrraFreeBoundary(
        case=case,
        z_bar=z_bar,
        z_R=z_R,
        D=D,
        x_R=crra_x_R(scenario, z_R),
        gee_at_cutoff=gee_at_cutoff,
        D_display=D_display,
        display_mismatch=mismatch,
    )
    logger.debug(f"CRRA oracle: case {case}, z_R={z_R:.14g}, D={D:.14g}")
    return result


# ---------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------


def _low_bracket(s: CrraScenario, x: float, n: float) -> float:
    """Antiderivative of nu^{-n-1} h(nu) below the cutoff."""
    eps = s.market.epsilon
    return (
        s.G / (s.q - n) * (1.0 - s.k ** (-s.q)) * x ** (s.q - n)
        + s.l * x ** (-n) / n
        - x ** (1.0 - n) / (n - 1.0) * (eps - s.b / s.k)
    )


def _high_bracket(s: CrraScenario, x: float, n: float) -> float:
    """Antiderivative of nu^{-n-1} h(nu) above the cutoff."""
    eps = s.market.epsilon
    return (
        s.G / (s.q - n) * x ** (s.q - n)
        + s.l * x ** (-n) / n
        + s.floor_utility * x ** (-n) / n
        - eps * x ** (1.0 - n) / (n - 1.0)
    )


def _power_integral(terms: Terms, lo: float, hi: float, n: float) -> float:
    """int_lo^hi nu^{-n-1} sum_i C_i nu^{a_i} d nu (every a_i - n > 0 when lo = 0)."""
    total = 0.0
    for coef, power in terms:
        e = power - n
        upper = hi**e / e
        lower = 0.0 if lo == 0.0 else lo**e / e
        total += coef * (upper - lower)
    return total


def _phi_coefficients(s: CrraScenario) -> Tuple[float, float]:
    n1, n2 = s.roots.n1, s.roots.n2
    r, rho, g = s.market.r, s.market.rho, s.gamma
    a1 = (
        (g * n2 / (1.0 - g) + 1.0) / s.M + (n2 - 1.0) / r - n2 / (rho * (1.0 - g))
    ) / (n1 - n2)
    a2 = (
        (g * n1 / (1.0 - g) + 1.0) / s.M + (n1 - 1.0) / r - n1 / (rho * (1.0 - g))
    ) / (n1 - n2)
    return a1, a2


def _phi_1(s: CrraScenario, y: float) -> float:
    a1, _ = _phi_coefficients(s)
    n1, g = s.roots.n1, s.gamma
    z = y / s.k
    return (
        a1 * s.b ** (1.0 - g + g * n1) * z**n1
        + s.G * z**s.q / s.M
        + s.b / s.market.r * z
    )


def _phi_2(s: CrraScenario, y: float) -> float:
    _, a2 = _phi_coefficients(s)
    n2, g = s.roots.n2, s.gamma
    z = y / s.k
    return a2 * s.b ** (1.0 - g + g * n2) * z**n2 + s.floor_utility / s.market.rho


def _phi_1_prime(s: CrraScenario, y: float) -> float:
    a1, _ = _phi_coefficients(s)
    n1, g = s.roots.n1, s.gamma
    z = y / s.k
    return (
        a1 * s.b ** (1.0 - g + g * n1) * n1 * z**n1 / y
        + s.G * s.q * z**s.q / (s.M * y)
        + s.b / (s.market.r * s.k)
    )


def _phi_2_prime(s: CrraScenario, y: float) -> float:
    _, a2 = _phi_coefficients(s)
    n2, g = s.roots.n2, s.gamma
    z = y / s.k
    return a2 * s.b ** (1.0 - g + g * n2) * n2 * z**n2 / y
