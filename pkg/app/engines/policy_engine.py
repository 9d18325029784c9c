"""
Policy engine: inverts the dual value function into primal quantities.

    X(y) = -J'(y)               wealth as a function of marginal value
    y*(x): X(y*) = x            marginal value of wealth
    c = I_{u_B}(y*) working, I_{u_A}(y*) retired
    pi = (theta/sigma) y* J''(y*, side)
    V(x) = J(y*) + y* x
"""

from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np

from app.engines.dual_engine import DualValueFunction, Side
from app.engines.felicity_engine import PreferencePair
from app.engines.market_engine import solve_characteristic_roots
from app.engines.resolvent_engine import ResolventKernel
from app.engines.retirement_engine import (
    RetirementEngine,
    RetirementSolution,
    marginal_benefit,
)
from app.schemas.market_schemas import MarketParams
from app.schemas.solution_schemas import (
    ComparativeStaticRow,
    ComparativeStaticTable,
    ConsumptionJump,
    PolicyDecision,
    PolicyRow,
    PortfolioJump,
)
from app.shared.errors import (
    ConfigError,
    DegenerateMarketError,
    DualLifeError,
    InfeasibleWealthError,
)
from app.shared.helpers.root_helper import solve_monotone

logger = logging.getLogger(__name__)


class PolicyEngine:
    """Primal policies of a solved scenario; every query is a pure evaluation."""

    def __init__(
        self,
        market: MarketParams,
        pair: PreferencePair,
        solution: RetirementSolution,
        dual: DualValueFunction,
        *,
        root_tol: float = 1e-12,
    ):
        self.market = market
        self.pair = pair
        self.solution = solution
        self.dual = dual
        self.root_tol = root_tol
        self.z_R = solution.z_R

        self.x_R = -dual.after.first(self.z_R)
        self.x_R_working_side = -dual.J_prime(self.z_R, Side.WORKING)
        mismatch = abs(self.x_R - self.x_R_working_side) / max(1.0, abs(self.x_R))
        if mismatch > 1e-8:
            logger.warning(
                f"Retirement threshold disagrees across z_R: {self.x_R:.12g} vs "
                f"{self.x_R_working_side:.12g}"
            )
        logger.info(f"Retirement wealth threshold x_R={self.x_R:.12g}")

    @property
    def borrowing_limit(self) -> float:
        """-eps/r: the present value of all future wages."""
        return -self.market.epsilon / self.market.r

    # ---------------------------------------------------------------------
    # Public API
    # ---------------------------------------------------------------------

    def wealth(self, y: float) -> float:
        """X(y) = -J'(y)."""
        return -self.dual.J_prime(y)

    def retired_wealth(self, y: float) -> float:
        """-J_A'(y) = Gamma_{I_{u_A}}(y): wealth of an agent already retired."""
        return -self.dual.after.first(y)

    def human_wealth(self, y: float) -> float:
        """Present value of future wages, P'(y); zero once retired."""
        return self.solution.labor_value_prime(y)

    def retirement_wealth_threshold(self) -> float:
        return self.x_R

    def marginal_value_of_wealth(self, x: float) -> float:
        if x <= self.borrowing_limit:
            raise InfeasibleWealthError(
                f"Wealth x={x:g} is at or below the borrowing limit "
                f"{self.borrowing_limit:g}"
            )
        if x == self.x_R:
            return self.z_R
        # X(z_R) = x_R, so each side is bracketed from z_R outwards
        if x > self.x_R:
            return solve_monotone(
                lambda y: self.retired_wealth(y) - x,
                self.z_R,
                increasing=False,
                rtol=self.root_tol,
                upper_cap=self.z_R,
            )
        return solve_monotone(
            lambda y: self.wealth(y) - x,
            self.z_R,
            increasing=False,
            rtol=self.root_tol,
            lower_cap=self.z_R,
        )

    def consumption(self, y: float, side: Side) -> float:
        felicity = self.pair.u_A if side is Side.RETIRED else self.pair.u_B
        return float(felicity.inverse_marginal(y))

    def portfolio(self, y: float, side: Side) -> float:
        return self.market.theta / self.market.sigma * y * self.dual.J_second(y, side)

    def value(self, x: float) -> float:
        y_star = self.marginal_value_of_wealth(x)
        return self.dual.J(y_star) + y_star * x

    def optimal_policy(self, x: float) -> PolicyDecision:
        y_star = self.marginal_value_of_wealth(x)
        retired = x >= self.x_R
        side = Side.RETIRED if retired else Side.WORKING
        return PolicyDecision(
            x=x,
            y_star=y_star,
            retired=retired,
            c=self.consumption(y_star, side),
            pi=self.portfolio(y_star, side),
            V=self.dual.J(y_star) + y_star * x,
        )

    def portfolio_jump(self) -> PortfolioJump:
        """Pi(z_R+) - Pi(z_R-) against -(2/(mu - r)) Psi(z_R)."""
        excess = self.market.mu - self.market.r
        if excess == 0.0:
            raise DegenerateMarketError("Portfolio jump is undefined when mu == r")
        kink = self.dual.kink_second_derivatives()
        scale = self.market.theta / self.market.sigma * self.z_R
        working = scale * kink.working
        retired = scale * kink.retired
        psi = marginal_benefit(self.pair, self.market.epsilon, self.z_R)
        jump = PortfolioJump(
            computed=working - retired,
            formula=-2.0 / excess * psi,
            working_portfolio=working,
            retired_portfolio=retired,
        )
        if jump.relative_error > 1e-6:
            logger.warning(
                f"Portfolio jump {jump.computed:.10g} differs from its closed form "
                f"{jump.formula:.10g}"
            )
        return jump

    def consumption_jump(self, tolerance: float = 1e-10) -> ConsumptionJump:
        working = float(self.pair.u_B.inverse_marginal(self.z_R))
        retired = float(self.pair.u_A.inverse_marginal(self.z_R))
        jump = retired - working
        return ConsumptionJump(
            working=working,
            retired=retired,
            jump=jump,
            has_jump=abs(jump) > tolerance * max(1.0, abs(working)),
        )

    def merton_retired_portfolio(self, x: float) -> float:
        """theta x / (sigma gamma): the retired CRRA portfolio when b = 0."""
        base = self.pair.base
        if base is None or base.risk_aversion is None or self.pair.b != 0.0:
            raise ValueError("Merton line needs a CRRA base felicity and b = 0")
        return self.market.theta * x / (self.market.sigma * base.risk_aversion)

    def duality_gap(
        self,
        wealth_probes: Sequence[float],
        *,
        decades: float = 0.5,
        count: int = 41,
    ) -> float:
        """
        Worst relative amount by which a local y-grid around y*(x) beats
        V(x) = J(y*) + y* x. Zero when y* minimises J(y) + y x on the grid.
        """
        worst = 0.0
        offsets = np.logspace(-decades, decades, count)
        for x in wealth_probes:
            y_star = self.marginal_value_of_wealth(float(x))
            target = self.dual.J(y_star) + y_star * x
            grid = np.unique(np.append(y_star * offsets, y_star))
            objective = np.array([self.dual.J(y) + y * x for y in grid])
            gap = (target - float(objective.min())) / max(1.0, abs(target))
            worst = max(worst, gap)
        logger.debug(f"Duality gap over {len(wealth_probes)} probes: {worst:.3g}")
        return worst

    def policy_table(self, grid: Sequence[float]) -> List[PolicyRow]:
        rows = []
        for y in np.asarray(grid, dtype=float):
            y = float(y)
            side = self.dual.side_of(y)
            rows.append(
                PolicyRow(
                    y=y,
                    X=self.wealth(y),
                    c=self.consumption(y, side),
                    pi=self.portfolio(y, side),
                    P=self.solution.labor_value(y),
                    human_wealth=self.human_wealth(y),
                    J=self.dual.J(y),
                )
            )
        return rows


def build_policy(
    market: MarketParams,
    pair: PreferencePair,
    *,
    quad_tol: float = 1e-10,
    root_tol: float = 1e-12,
    max_doublings: int = 60,
) -> PolicyEngine:
    """Roots, kernel, free boundary, dual and policy for one scenario."""
    roots = solve_characteristic_roots(market)
    kernel = ResolventKernel.from_market(
        market, roots, pair.breakpoints, tol=quad_tol, max_doublings=max_doublings
    )
    engine = RetirementEngine(kernel, pair, market.epsilon, root_tol=root_tol)
    solution = engine.solve_free_boundary()
    return PolicyEngine(
        market, pair, solution, DualValueFunction(solution), root_tol=root_tol
    )


def comparative_static_epsilon(
    market: MarketParams,
    pair: PreferencePair,
    eps_list: Sequence[float],
    *,
    quad_tol: float = 1e-10,
    root_tol: float = 1e-12,
) -> ComparativeStaticTable:
    """
    (eps, z_bar, z_R, D, x_R) per wage. Monotonicity (z_R decreasing, x_R
    increasing) is judged on the rows before the first failure.
    """
    values = [float(v) for v in eps_list]
    if len(values) < 2 or any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(
            f"Wage list must be strictly increasing with >= 2 entries: {values}"
        )

    rows: List[ComparativeStaticRow] = []
    for eps in values:
        try:
            policy = build_policy(
                market.with_updates(epsilon=eps),
                pair,
                quad_tol=quad_tol,
                root_tol=root_tol,
            )
            rows.append(
                ComparativeStaticRow(
                    epsilon=eps,
                    z_bar=policy.solution.z_bar,
                    z_R=policy.z_R,
                    D=policy.solution.D,
                    x_R=policy.x_R,
                )
            )
        except DualLifeError as e:
            logger.warning(f"Comparative static row eps={eps:g} failed: {e.detail}")
            rows.append(ComparativeStaticRow(epsilon=eps, error=e.detail))

    prefix: List[ComparativeStaticRow] = []
    for row in rows:
        if not row.ok:
            break
        prefix.append(row)
    enough = len(prefix) >= 2
    return ComparativeStaticTable(
        rows=rows,
        z_R_decreasing=enough
        and all(a.z_R > b.z_R for a, b in zip(prefix, prefix[1:])),
        x_R_increasing=enough
        and all(a.x_R < b.x_R for a, b in zip(prefix, prefix[1:])),
    )
