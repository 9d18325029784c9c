"""
Resolvent engine: the operators Xi_f and Gamma_f of the dual process.

    Xi_f(y)    = K [ y^{n2}   int_0^y nu^{-n2-1} f + y^{n1}   int_y^inf nu^{-n1-1} f ]
    Gamma_f(y) = K [ y^{n2-1} int_0^y nu^{-n2}   f + y^{n1-1} int_y^inf nu^{-n1}   f ]

with K = 2/(theta^2 (n1 - n2)). Xi_f(y) is E int_0^inf e^{-rho t} f(Y_t) dt.

Both halves are integrated in log-distance from y (nu = y e^{-s} below,
nu = y e^{s} above), split at the kernel breakpoints and then extended by
doubling intervals until the increment is negligible.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from app.schemas.market_schemas import MarketParams, QuadraticRoots
from app.shared.errors import ProbeTooCloseError, QuadratureError
from app.shared.helpers.grid_helper import central_first, central_second

logger = logging.getLogger(__name__)

Integrand = Callable[[float], float]

# nu is kept inside [_TINY, _HUGE] so that f never sees 0 or inf
_TINY = 1e-300
_HUGE = 1e300


@dataclass(frozen=True)
class ResolventHalves:
    """
    Scale-free halves of a resolvent integral at y:
    lower = int_0^inf e^{-a s} f(y e^{-s}) ds, upper = int_0^inf e^{-b s} f(y e^{s}) ds.
    """

    lower: float
    upper: float


@dataclass(frozen=True)
class GrowthBoundFit:
    constant: float
    worst_outer_ratio: float

    @property
    def holds(self) -> bool:
        return self.worst_outer_ratio <= 1.0 + 1e-9


@dataclass(frozen=True)
class ResolventKernel:
    roots: QuadraticRoots
    theta: float
    r: float
    rho: float
    breakpoints: Tuple[float, ...] = field(default=())
    tol: float = 1e-10
    max_doublings: int = 60

    def __post_init__(self) -> None:
        points = tuple(sorted({float(p) for p in self.breakpoints if math.isfinite(p)}))
        if any(p <= 0.0 for p in points):
            raise ValueError(f"Breakpoints must be strictly positive: {points}")
        object.__setattr__(self, "breakpoints", points)

    @classmethod
    def from_market(
        cls,
        market: MarketParams,
        roots: QuadraticRoots,
        breakpoints: Iterable[float] = (),
        *,
        tol: float = 1e-10,
        max_doublings: int = 60,
    ) -> "ResolventKernel":
        return cls(
            roots=roots,
            theta=market.theta,
            r=market.r,
            rho=market.rho,
            breakpoints=tuple(breakpoints),
            tol=tol,
            max_doublings=max_doublings,
        )

    @property
    def prefactor(self) -> float:
        return 2.0 / (self.theta**2 * (self.roots.n1 - self.roots.n2))

    def with_breakpoints(self, *points: float) -> "ResolventKernel":
        return dataclasses.replace(
            self, breakpoints=tuple(self.breakpoints) + tuple(points)
        )

    # ---------------------------------------------------------------------
    # Public API
    # ---------------------------------------------------------------------

    def xi(self, f: Integrand, y: float, tol: Optional[float] = None) -> float:
        halves = self.xi_halves(f, y, tol)
        return self.prefactor * (halves.lower + halves.upper)

    def gamma(self, g: Integrand, y: float, tol: Optional[float] = None) -> float:
        halves = self.gamma_halves(g, y, tol)
        return self.prefactor * (halves.lower + halves.upper)

    def xi_halves(
        self, f: Integrand, y: float, tol: Optional[float] = None
    ) -> ResolventHalves:
        n1, n2 = self.roots.n1, self.roots.n2
        return ResolventHalves(
            lower=self._half(f, y, -n2, -1, tol),
            upper=self._half(f, y, n1, +1, tol),
        )

    def gamma_halves(
        self, g: Integrand, y: float, tol: Optional[float] = None
    ) -> ResolventHalves:
        n1, n2 = self.roots.n1, self.roots.n2
        return ResolventHalves(
            lower=self._half(g, y, 1.0 - n2, -1, tol),
            upper=self._half(g, y, n1 - 1.0, +1, tol),
        )

    def xi_derivatives(
        self, f: Integrand, y: float, tol: Optional[float] = None
    ) -> Tuple[float, float, float]:
        """
        (Xi_f, Xi_f', Xi_f'') at y from one pair of halves.

        Differentiating under the integral leaves the boundary term
        -2 f(y) / (theta^2 y^2) in the second derivative.
        """
        n1, n2 = self.roots.n1, self.roots.n2
        halves = self.xi_halves(f, y, tol)
        k = self.prefactor
        value = k * (halves.lower + halves.upper)
        first = k * (n2 * halves.lower + n1 * halves.upper) / y
        second = k * (
            n2 * (n2 - 1.0) * halves.lower + n1 * (n1 - 1.0) * halves.upper
        ) / (y * y) - 2.0 * float(f(y)) / (self.theta**2 * y * y)
        return value, first, second

    def gamma_derivatives(
        self, g: Integrand, y: float, tol: Optional[float] = None
    ) -> Tuple[float, float]:
        """(Gamma_g, Gamma_g') at y; the boundary terms cancel exactly."""
        n1, n2 = self.roots.n1, self.roots.n2
        halves = self.gamma_halves(g, y, tol)
        k = self.prefactor
        value = k * (halves.lower + halves.upper)
        first = k * ((n2 - 1.0) * halves.lower + (n1 - 1.0) * halves.upper) / y
        return value, first

    def lower_power_integral(
        self, f: Integrand, y: float, exponent: float, tol: Optional[float] = None
    ) -> float:
        """int_0^y nu^exponent f(nu) d nu (needs exponent > -1 plus f's decay)."""
        rate = exponent + 1.0
        return y**rate * self._half(f, y, rate, -1, tol)

    def upper_power_integral(
        self, f: Integrand, y: float, exponent: float, tol: Optional[float] = None
    ) -> float:
        """int_y^inf nu^exponent f(nu) d nu."""
        rate = -(exponent + 1.0)
        return y ** (exponent + 1.0) * self._half(f, y, rate, +1, tol)

    def hjb_residual(
        self,
        f: Integrand,
        xi_f: Integrand,
        y: float,
        h: Optional[float] = None,
    ) -> float:
        """
        (theta^2/2) y^2 Xi'' + (rho - r) y Xi' - rho Xi + f(y) with fourth-order
        central differences of ``xi_f`` at step h (default 1e-2 y).
        """
        step = h if h is not None else 1e-2 * y
        if y - 2.0 * step <= 0.0:
            raise ProbeTooCloseError(f"Step {step:g} too large for probe y={y:g}")
        for point in self.breakpoints:
            if abs(y - point) <= 10.0 * step:
                raise ProbeTooCloseError(
                    f"Probe y={y:.6g} lies within 10 steps of the kink at {point:.6g}"
                )
        d1 = central_first(xi_f, y, step)
        d2 = central_second(xi_f, y, step)
        return (
            0.5 * self.theta**2 * y * y * d2
            + (self.rho - self.r) * y * d1
            - self.rho * xi_f(y)
            + float(f(y))
        )

    def fit_growth_bound(
        self,
        f: Integrand,
        inner_grid: Sequence[float],
        outer_grid: Sequence[float],
    ) -> GrowthBoundFit:
        """
        Fit C in |Xi_f'(y)| <= C (y^{n1-1} + y^{n2-1}) on ``inner_grid`` and
        report the worst ratio |Xi_f'| / bound on ``outer_grid``.
        """
        n1, n2 = self.roots.n1, self.roots.n2

        def _ratios(grid: Sequence[float]) -> np.ndarray:
            values = []
            for y in grid:
                _, slope, _ = self.xi_derivatives(f, float(y))
                values.append(abs(slope) / (y ** (n1 - 1.0) + y ** (n2 - 1.0)))
            return np.asarray(values)

        constant = float(_ratios(inner_grid).max())
        worst = float(_ratios(outer_grid).max()) / constant if constant > 0 else 0.0
        return GrowthBoundFit(constant=constant, worst_outer_ratio=worst)

    # ---------------------------------------------------------------------
    # Internal helpers
    # ---------------------------------------------------------------------

    def _half(
        self,
        f: Integrand,
        y: float,
        rate: float,
        direction: int,
        tol: Optional[float],
    ) -> float:
        """int_0^inf e^{-rate s} f(y e^{direction s}) ds."""
        if y <= 0.0:
            raise ValueError(f"Resolvent evaluated at non-positive y={y}")
        rtol = self.tol if tol is None else tol

        if direction > 0:
            cuts = [math.log(p / y) for p in self.breakpoints if p > y]
            s_limit = math.log(_HUGE / y)
        else:
            cuts = sorted(math.log(y / p) for p in self.breakpoints if p < y)
            s_limit = math.log(y / _TINY)

        def integrand(s: float) -> float:
            weight = math.exp(-rate * s)
            if weight == 0.0:
                return 0.0
            return weight * float(f(y * math.exp(direction * s)))

        total = 0.0
        mass = 0.0
        start = 0.0
        for cut in cuts:
            if cut > s_limit:
                break
            piece = _integrate(integrand, start, cut, rtol)
            total += piece
            mass += abs(piece)
            start = cut

        width = 1.0
        for _ in range(self.max_doublings):
            end = min(start + width, s_limit)
            piece = _integrate(integrand, start, end, rtol)
            total += piece
            mass += abs(piece)
            if abs(piece) <= rtol * mass:
                return total
            if end >= s_limit:
                break
            start = end
            width *= 2.0

        raise QuadratureError(
            f"Resolvent tail did not decay at y={y:.6g} (rate {rate:.6g}, "
            f"direction {direction:+d})",
            partial_estimate=total,
        )


def _integrate(integrand: Integrand, a: float, b: float, rtol: float) -> float:
    if b <= a:
        return 0.0
    result = quad(integrand, a, b, epsabs=0.0, epsrel=rtol, limit=200, full_output=1)
    if len(result) > 3:
        logger.debug(f"quad on [{a:.4g}, {b:.4g}]: {result[3]}")
    return float(result[0])
