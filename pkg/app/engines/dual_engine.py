"""
Dual engine: post-retirement dual value J_A = Xi_{u~_A} and the full dual
value J = J_A + P.

For y >= z_R, J(y) = D y^{n2} + Xi_{u~_B}(y) + (eps/r) y; below z_R, J = J_A.
First derivatives come from Gamma (J_A' = -Gamma_{I_{u_A}}); second
derivatives from the analytic derivative of Gamma.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from app.engines.felicity_engine import PreferencePair
from app.engines.resolvent_engine import ResolventKernel
from app.engines.retirement_engine import RetirementSolution

logger = logging.getLogger(__name__)


class Side(str, Enum):
    """Which one-sided limit to use at the kink z_R."""

    RETIRED = "retired"  # y <= z_R
    WORKING = "working"  # y > z_R


@dataclass(frozen=True)
class KinkSecondDerivatives:
    retired: float
    working: float

    @property
    def jump(self) -> float:
        return self.working - self.retired


class PostRetirementDual:
    """J_A(y) = Xi_{u~_A}(y); J_A' = -Gamma_{I_{u_A}} and J_A'' = -Gamma'_{I_{u_A}}."""

    def __init__(self, pair: PreferencePair, kernel: ResolventKernel):
        self.pair = pair
        self.kernel = kernel

    def value(self, y: float) -> float:
        return self.kernel.xi(self.pair.u_A.conjugate, y)

    def first(self, y: float) -> float:
        return -self.kernel.gamma(self.pair.u_A.inverse_marginal, y)

    def second(self, y: float) -> float:
        _, slope = self.kernel.gamma_derivatives(self.pair.u_A.inverse_marginal, y)
        return -slope

    def derivatives(self, y: float) -> Tuple[float, float]:
        level, slope = self.kernel.gamma_derivatives(self.pair.u_A.inverse_marginal, y)
        return -level, -slope

    def ode_residual(self, y: float) -> float:
        """(theta^2/2) y^2 J_A'' + (rho - r) y J_A' - rho J_A + u~_A(y)."""
        k = self.kernel
        first, second = self.derivatives(y)
        return (
            0.5 * k.theta**2 * y * y * second
            + (k.rho - k.r) * y * first
            - k.rho * self.value(y)
            + float(self.pair.u_A.conjugate(y))
        )


class DualValueFunction:
    """
    Dual value function of the retirement problem, strictly convex with a
    second-derivative discontinuity at z_R.
    """

    def __init__(self, solution: RetirementSolution):
        self.solution = solution
        self.pair = solution.pair
        self.kernel = solution.kernel
        self.z_R = solution.z_R
        self.D = solution.D
        self.eps = solution.eps
        self.after = PostRetirementDual(solution.pair, solution.kernel)

    @property
    def components(self) -> dict:
        return {
            "D": self.D,
            "xi_u_B": lambda y: self.kernel.xi(self.pair.u_B.conjugate, y),
            "xi_u_A": self.after.value,
            "eps_over_r": self.eps / self.kernel.r,
        }

    # ---------------------------------------------------------------------
    # Public API
    # ---------------------------------------------------------------------

    def J(self, y: float) -> float:
        if y <= self.z_R:
            return self.after.value(y)
        n2 = self.kernel.roots.n2
        return (
            self.D * y**n2
            + self.kernel.xi(self.pair.u_B.conjugate, y)
            + self.eps * y / self.kernel.r
        )

    def J_prime(self, y: float, side: Optional[Side] = None) -> float:
        """First derivative; continuous at z_R, where either side may be asked for."""
        if side is None:
            side = self.side_of(y)
        if side is Side.RETIRED:
            return self.after.first(y)
        return self._working_derivatives(y)[0]

    def J_second(self, y: float, side: Optional[Side] = None) -> float:
        """
        Second derivative. Away from z_R the side follows from y; at z_R the
        caller must pick one.
        """
        if side is None:
            if y == self.z_R:
                raise ValueError("J'' is discontinuous at z_R: pass a side")
            side = Side.RETIRED if y < self.z_R else Side.WORKING
        if side is Side.RETIRED:
            return self.after.second(y)
        return self._working_derivatives(y)[1]

    def kink_second_derivatives(self) -> KinkSecondDerivatives:
        return KinkSecondDerivatives(
            retired=self.J_second(self.z_R, Side.RETIRED),
            working=self.J_second(self.z_R, Side.WORKING),
        )

    def side_of(self, y: float) -> Side:
        return Side.RETIRED if y <= self.z_R else Side.WORKING

    # ---------------------------------------------------------------------
    # Internal helpers
    # ---------------------------------------------------------------------

    def _working_derivatives(self, y: float) -> Tuple[float, float]:
        """
        J' = n2 D y^{n2-1} - Gamma_{I_B} + eps/r
        J'' = n2(n2-1) D y^{n2-2} - Gamma'_{I_B}
        """
        n2 = self.kernel.roots.n2
        level, slope = self.kernel.gamma_derivatives(self.pair.u_B.inverse_marginal, y)
        first = n2 * self.D * y ** (n2 - 1.0) - level + self.eps / self.kernel.r
        second = n2 * (n2 - 1.0) * self.D * y ** (n2 - 2.0) - slope
        return first, second
