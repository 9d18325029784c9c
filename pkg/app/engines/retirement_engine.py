"""
Retirement engine: marginal benefit of work, the free boundary z_R and the
utility value of lifetime labor P(y).

    Psi(y) = (u~_B(y) - u~_A(y)) / y + eps,      h(y) = y Psi(y)
    G(y)   = int_y^inf nu^{-n1-1} h(nu) d nu      (G(z_R) = 0)
    D      = -K int_0^{z_R} nu^{-n2-1} h(nu) d nu
    P(y)   = D y^{n2} + Xi_h(y) for y > z_R, 0 otherwise
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.engines.felicity_engine import PreferencePair
from app.engines.resolvent_engine import ResolventKernel
from app.schemas.report_schemas import VIReport
from app.shared.errors import AssumptionViolationError, BracketError
from app.shared.helpers.grid_helper import central_first, central_second
from app.shared.helpers.root_helper import expand_bracket, find_root, solve_monotone

logger = logging.getLogger(__name__)

# finite differences on P are taken at this tolerance so quadrature noise stays
# below the stencil's resolution
_FD_QUAD_TOL = 1e-13


def marginal_benefit(pair: PreferencePair, eps: float, y: float) -> float:
    """Psi(y) = (u~_B(y) - u~_A(y)) / y + eps."""
    return float(pair.conjugate_gap(y)) / y + eps


def labor_flow(pair: PreferencePair, eps: float, y: float) -> float:
    """h(y) = y Psi(y)."""
    return float(pair.conjugate_gap(y)) + eps * y


def find_zbar(pair: PreferencePair, eps: float, *, rtol: float = 1e-12) -> float:
    """Unique root of the strictly increasing Psi."""
    try:
        z_bar = solve_monotone(
            lambda y: marginal_benefit(pair, eps, y), 1.0, increasing=True, rtol=rtol
        )
    except BracketError as e:
        raise AssumptionViolationError(
            f"Marginal benefit of work has no sign change in [1e-12, 1e12]: {e.detail}"
        )
    logger.debug(f"z_bar = {z_bar:.12g}")
    return z_bar


@dataclass(frozen=True)
class RetirementSolution:
    z_bar: float
    z_R: float
    D: float
    kernel: ResolventKernel
    pair: PreferencePair
    eps: float
    gee_at_zbar: float
    smooth_pasting_value: float
    smooth_pasting_slope: float

    def labor_flow(self, y: float) -> float:
        return labor_flow(self.pair, self.eps, y)

    def labor_value(self, y: float, tol: Optional[float] = None) -> float:
        if y <= self.z_R:
            return 0.0
        return self._continuation_value(y, tol)

    def labor_value_prime(self, y: float) -> float:
        if y <= self.z_R:
            return 0.0
        return self._continuation_slopes(y)[0]

    def labor_value_second(self, y: float) -> float:
        """Second derivative; at z_R itself the right-hand limit."""
        if y < self.z_R:
            return 0.0
        return self._continuation_slopes(y)[1]

    def labor_value_derivatives(self, y: float) -> Tuple[float, float, float]:
        if y <= self.z_R:
            return 0.0, 0.0, 0.0
        first, second = self._continuation_slopes(y)
        return self._continuation_value(y), first, second

    def growth_bound(self, y: float) -> float:
        """|D| z_R^{n2} + |Xi_{u~_A}(y)| + |Xi_{u~_B}(y)| + (eps/r) y."""
        n2 = self.kernel.roots.n2
        return (
            abs(self.D) * self.z_R**n2
            + abs(self.kernel.xi(self.pair.u_A.conjugate, y))
            + abs(self.kernel.xi(self.pair.u_B.conjugate, y))
            + self.eps * y / self.kernel.r
        )

    # ---------------------------------------------------------------------
    # Internal helpers
    # ---------------------------------------------------------------------

    def _continuation_value(self, y: float, tol: Optional[float] = None) -> float:
        n2 = self.kernel.roots.n2
        return self.D * y**n2 + self.kernel.xi(self.labor_flow, y, tol)

    def _continuation_slopes(self, y: float) -> Tuple[float, float]:
        """
        P' = n2 D y^{n2-1} + Gamma_{I_A} - Gamma_{I_B} + eps/r and its
        derivative, from one Gamma evaluation of the consumption gap.
        """
        n2 = self.kernel.roots.n2
        gap, gap_prime = self.kernel.gamma_derivatives(self.pair.consumption_gap, y)
        first = n2 * self.D * y ** (n2 - 1.0) + gap + self.eps / self.kernel.r
        second = n2 * (n2 - 1.0) * self.D * y ** (n2 - 2.0) + gap_prime
        return first, second


class RetirementEngine:
    """Solves the optimal stopping problem behind voluntary retirement."""

    def __init__(
        self,
        kernel: ResolventKernel,
        pair: PreferencePair,
        eps: float,
        *,
        root_tol: float = 1e-12,
    ):
        self.kernel = kernel.with_breakpoints(*pair.breakpoints)
        self.pair = pair
        self.eps = eps
        self.root_tol = root_tol

    # ---------------------------------------------------------------------
    # Public API
    # ---------------------------------------------------------------------

    def marginal_benefit(self, y: float) -> float:
        return marginal_benefit(self.pair, self.eps, y)

    def labor_flow(self, y: float) -> float:
        return labor_flow(self.pair, self.eps, y)

    def find_zbar(self) -> float:
        return find_zbar(self.pair, self.eps, rtol=self.root_tol)

    def gee(self, y: float, tol: Optional[float] = None) -> float:
        """G(y) = int_y^inf nu^{-n1-1} h(nu) d nu."""
        n1 = self.kernel.roots.n1
        return self.kernel.upper_power_integral(self.labor_flow, y, -n1 - 1.0, tol)

    def cutoff_classification(self, point: float) -> bool:
        """True when G(point) > 0, i.e. the free boundary lies below ``point``."""
        return self.gee(point) > 0.0

    def solve_free_boundary(self) -> RetirementSolution:
        z_bar = self.find_zbar()
        gee_at_zbar = self.gee(z_bar)
        if not gee_at_zbar > 0.0:
            raise AssumptionViolationError(
                f"G(z_bar) = {gee_at_zbar:.6g} is not positive (z_bar={z_bar:.6g})"
            )

        try:
            lo, hi = expand_bracket(
                self.gee, 0.5 * z_bar, increasing=True, upper_cap=z_bar
            )
            z_R = find_root(self.gee, lo, hi, rtol=self.root_tol, method="bisect")
        except BracketError as e:
            raise AssumptionViolationError(
                f"G has no sign change in (0, z_bar={z_bar:.6g}): {e.detail}"
            )

        kernel = self.kernel.with_breakpoints(z_R)
        n2 = kernel.roots.n2
        D = -kernel.prefactor * kernel.lower_power_integral(
            self.labor_flow, z_R, -n2 - 1.0
        )
        logger.info(f"Free boundary z_R={z_R:.12g}, D={D:.12g} (z_bar={z_bar:.12g})")

        draft = RetirementSolution(
            z_bar=z_bar,
            z_R=z_R,
            D=D,
            kernel=kernel,
            pair=self.pair,
            eps=self.eps,
            gee_at_zbar=gee_at_zbar,
            smooth_pasting_value=0.0,
            smooth_pasting_slope=0.0,
        )
        value = draft._continuation_value(z_R)
        slope, _ = draft._continuation_slopes(z_R)
        scale = max(1.0, self.eps / kernel.r)
        if max(abs(value), abs(slope)) > 1e-8 * scale:
            logger.warning(
                f"Smooth pasting residuals P(z_R)={value:.3g}, P'(z_R+)={slope:.3g}"
            )
        return dataclasses.replace(
            draft, smooth_pasting_value=abs(value), smooth_pasting_slope=abs(slope)
        )

    def verify_variational_inequality(
        self,
        solution: RetirementSolution,
        grid: Sequence[float],
        *,
        step: float = 1e-2,
        tolerance: float = 1e-6,
    ) -> VIReport:
        """
        Stopping probes (y < z_R) must have h(y) <= 0. Continuation probes
        (y > z_R) must solve L P + h = 0, with L P from finite differences.
        Probes within 10 steps of z_R or of a kink are skipped.
        """
        kinks = (solution.z_R,) + tuple(solution.kernel.breakpoints)
        theta, r, rho = solution.kernel.theta, solution.kernel.r, solution.kernel.rho

        def value(y: float) -> float:
            return solution.labor_value(y, tol=_FD_QUAD_TOL)

        stopping = []
        continuation = []
        skipped = 0
        for y in np.asarray(grid, dtype=float):
            h_step = step * y
            if any(abs(y - k) <= 10.0 * h_step for k in kinks):
                skipped += 1
                continue
            flow = solution.labor_flow(y)
            if y < solution.z_R:
                stopping.append(flow)
                continue
            d1 = central_first(value, y, h_step)
            d2 = central_second(value, y, h_step)
            residual = (
                0.5 * theta**2 * y * y * d2 + (rho - r) * y * d1 - rho * value(y) + flow
            )
            continuation.append(abs(residual) / max(1.0, abs(flow)))

        report = VIReport(
            n_stopping=len(stopping),
            n_continuation=len(continuation),
            n_skipped=skipped,
            max_stopping_violation=max(stopping) if stopping else -np.inf,
            max_continuation_residual=max(continuation) if continuation else 0.0,
            tolerance=tolerance,
        )
        if not report.passed:
            logger.warning(
                "Variational inequality violated: "
                f"stopping {report.max_stopping_violation:.3g}, "
                f"continuation {report.max_continuation_residual:.3g}"
            )
        return report
