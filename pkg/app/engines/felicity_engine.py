"""
Felicity engine: the admissible felicity interface, the CRRA instance, the
work/retirement transformation family and the numeric assumption checks.

Every curve accepts a float or a numpy array and returns the same kind.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad

from app.schemas.market_schemas import QuadraticRoots
from app.schemas.report_schemas import AssumptionReport
from app.shared.errors import AssumptionViolationError, InvalidPreferenceError

logger = logging.getLogger(__name__)

ScalarOrArray = Union[float, np.ndarray]
Curve = Callable[[ScalarOrArray], ScalarOrArray]


def _like(values: np.ndarray, template: ScalarOrArray) -> ScalarOrArray:
    if np.ndim(template) == 0:
        return float(values)
    return values


@dataclass(frozen=True)
class FelicityFunction:
    """
    Felicity u with its marginal u', inverse marginal I_u (extended by 0 above
    u'(0)) and conjugate u~(y) = sup_c (u(c) - y c).

    ``breakpoints`` lists the y-values where I_u or u~ have kinks.
    """

    name: str
    evaluate: Curve
    marginal: Curve
    inverse_marginal: Curve
    conjugate: Curve
    marginal_at_zero: float = math.inf
    breakpoints: Tuple[float, ...] = ()
    risk_aversion: Optional[float] = None


# ---------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------


def crra(gamma: float) -> FelicityFunction:
    """u(c) = c^{1-gamma}/(1-gamma)."""
    if not gamma > 0.0 or gamma == 1.0:
        raise InvalidPreferenceError(
            "CRRA needs gamma > 0 and gamma != 1 (log utility unsupported), "
            f"got {gamma}"
        )
    one_minus = 1.0 - gamma
    conj_scale = gamma / one_minus
    conj_power = -one_minus / gamma

    def evaluate(c: ScalarOrArray) -> ScalarOrArray:
        with np.errstate(divide="ignore"):
            return _like(np.power(np.asarray(c, dtype=float), one_minus) / one_minus, c)

    def marginal(c: ScalarOrArray) -> ScalarOrArray:
        with np.errstate(divide="ignore"):
            return _like(np.power(np.asarray(c, dtype=float), -gamma), c)

    def inverse_marginal(y: ScalarOrArray) -> ScalarOrArray:
        return _like(np.power(np.asarray(y, dtype=float), -1.0 / gamma), y)

    def conjugate(y: ScalarOrArray) -> ScalarOrArray:
        return _like(conj_scale * np.power(np.asarray(y, dtype=float), conj_power), y)

    return FelicityFunction(
        name=f"crra(gamma={gamma:g})",
        evaluate=evaluate,
        marginal=marginal,
        inverse_marginal=inverse_marginal,
        conjugate=conjugate,
        marginal_at_zero=math.inf,
        risk_aversion=gamma,
    )


def make_pre_retirement(base: FelicityFunction, l: float) -> FelicityFunction:
    """u_B(c) = u(c) - l; the marginal and inverse marginal are unchanged."""
    if l < 0.0:
        raise InvalidPreferenceError(f"Disutility of work l must be >= 0, got {l}")
    if l == 0.0:
        return dataclasses.replace(base, name=f"{base.name} - 0")

    def evaluate(c: ScalarOrArray) -> ScalarOrArray:
        return base.evaluate(c) - l

    def conjugate(y: ScalarOrArray) -> ScalarOrArray:
        return base.conjugate(y) - l

    return dataclasses.replace(
        base, name=f"{base.name} - {l:g}", evaluate=evaluate, conjugate=conjugate
    )


def make_post_retirement(
    base: FelicityFunction, k: float, b: float
) -> FelicityFunction:
    """
    u_A(c) = u(k c + b).

    With the threshold u'(b) (u'(0) when b = 0, possibly infinite):
    I_{u_A}(y) = (I_u(y/k) - b)/k when y/k <= u'(b), else 0, and
    u~_A(y) = u~(y/k) + b y/k when y/k <= u'(b), else u(b).
    """
    if k < 1.0:
        raise InvalidPreferenceError(f"Leisure scale k must be >= 1, got {k}")
    if b < 0.0:
        raise InvalidPreferenceError(f"Consumption shift b must be >= 0, got {b}")

    threshold = float(base.marginal(b)) if b > 0.0 else base.marginal_at_zero
    cutoff = k * threshold
    floor_utility = float(base.evaluate(b)) if b > 0.0 else float("nan")

    def evaluate(c: ScalarOrArray) -> ScalarOrArray:
        if np.ndim(c) == 0:
            return base.evaluate(k * float(c) + b)
        return base.evaluate(k * np.asarray(c, dtype=float) + b)

    def marginal(c: ScalarOrArray) -> ScalarOrArray:
        if np.ndim(c) == 0:
            return k * base.marginal(k * float(c) + b)
        return k * base.marginal(k * np.asarray(c, dtype=float) + b)

    def inverse_marginal(y: ScalarOrArray) -> ScalarOrArray:
        if np.ndim(y) == 0:
            z = float(y) / k
            return (base.inverse_marginal(z) - b) / k if z <= threshold else 0.0
        z = np.asarray(y, dtype=float) / k
        return np.where(z <= threshold, (base.inverse_marginal(z) - b) / k, 0.0)

    def conjugate(y: ScalarOrArray) -> ScalarOrArray:
        if np.ndim(y) == 0:
            z = float(y) / k
            return base.conjugate(z) + b * z if z <= threshold else floor_utility
        z = np.asarray(y, dtype=float) / k
        return np.where(z <= threshold, base.conjugate(z) + b * z, floor_utility)

    kinks = {k * point for point in base.breakpoints}
    if math.isfinite(cutoff):
        kinks.add(cutoff)

    return FelicityFunction(
        name=f"{base.name}(k={k:g}, b={b:g})",
        evaluate=evaluate,
        marginal=marginal,
        inverse_marginal=inverse_marginal,
        conjugate=conjugate,
        marginal_at_zero=cutoff,
        breakpoints=tuple(sorted(kinks)),
        risk_aversion=base.risk_aversion,
    )


@dataclass(frozen=True)
class PreferencePair:
    """Pre-retirement u_B and post-retirement u_A felicities."""

    u_B: FelicityFunction
    u_A: FelicityFunction
    base: Optional[FelicityFunction] = None
    l: float = 0.0
    k: float = 1.0
    b: float = 0.0

    @classmethod
    def from_example_family(
        cls, base: FelicityFunction, l: float, k: float, b: float
    ) -> "PreferencePair":
        """u_B = u - l and u_A = u(k c + b), which needs (k-1)^2 + l^2 != 0."""
        if (k - 1.0) ** 2 + l**2 == 0.0:
            raise AssumptionViolationError(
                "Retirement must change preferences: (k-1)^2 + l^2 != 0 is required "
                f"(got l={l:g}, k={k:g})"
            )
        return cls(
            u_B=make_pre_retirement(base, l),
            u_A=make_post_retirement(base, k, b),
            base=base,
            l=l,
            k=k,
            b=b,
        )

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(sorted(set(self.u_B.breakpoints) | set(self.u_A.breakpoints)))

    @property
    def cutoff(self) -> float:
        """k u'(b): where the post-retirement consumption floor starts binding."""
        return self.u_A.marginal_at_zero

    def conjugate_gap(self, y: ScalarOrArray) -> ScalarOrArray:
        """u~_B(y) - u~_A(y)."""
        return self.u_B.conjugate(y) - self.u_A.conjugate(y)

    def consumption_gap(self, y: ScalarOrArray) -> ScalarOrArray:
        """I_{u_A}(y) - I_{u_B}(y): consumption change when retiring at y."""
        return self.u_A.inverse_marginal(y) - self.u_B.inverse_marginal(y)


# ---------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------


def lower_tail_is_finite(
    inverse_marginal: Curve,
    n2: float,
    *,
    y: float = 1.0,
    pieces: int = 60,
    window: int = 10,
) -> bool:
    """
    Integrability of int_0^y eta^{-n2} I(eta) d eta judged on dyadic pieces
    [y 2^{-j-1}, y 2^{-j}]: the last ``window`` pieces must shrink
    geometrically.
    """
    masses = []
    upper = y
    for _ in range(pieces):
        lower = 0.5 * upper
        value, _ = quad(
            lambda eta: eta ** (-n2) * inverse_marginal(eta), lower, upper, limit=100
        )
        masses.append(abs(value))
        upper = lower

    tail = np.asarray(masses[-window:])
    if tail[-1] == 0.0:
        return True
    if np.any(tail[:-1] == 0.0):
        return False
    ratios = tail[1:] / tail[:-1]
    return bool(np.all(ratios < 1.0) and ratios.mean() < 1.0 - 1e-3)


def verify_assumptions(
    pair: PreferencePair,
    roots: QuadraticRoots,
    grid: Sequence[float],
    eps: float,
    *,
    near_zero_probes: int = 5,
) -> AssumptionReport:
    """Numeric checks of integrability, utility ordering and Psi(0+) < 0."""
    y = np.sort(np.asarray(grid, dtype=float))
    if y.size == 0 or np.any(y <= 0.0):
        raise ValueError("Assumption grid must be non-empty and strictly positive")

    integrable_pre = lower_tail_is_finite(pair.u_B.inverse_marginal, roots.n2)
    integrable_post = lower_tail_is_finite(pair.u_A.inverse_marginal, roots.n2)

    with np.errstate(divide="ignore", invalid="ignore"):
        working = pair.u_B.evaluate(pair.u_B.inverse_marginal(y))
        retired = pair.u_A.evaluate(pair.u_A.inverse_marginal(y))
    margins = np.asarray(retired - working, dtype=float)
    finite = np.any(np.isfinite(margins))
    worst_margin = float(np.nanmin(margins)) if finite else -math.inf
    ordering = bool(np.all(np.isfinite(margins)) and np.all(margins > 0.0))

    head = y[: min(near_zero_probes, y.size)]
    psi = np.asarray(pair.conjugate_gap(head), dtype=float) / head + eps
    psi_ok = bool(np.all(psi < 0.0) and np.all(np.diff(psi) > 0.0))

    report = AssumptionReport(
        integrable_pre=integrable_pre,
        integrable_post=integrable_post,
        utility_ordering=ordering,
        psi_negative_near_zero=psi_ok,
        worst_ordering_margin=worst_margin,
        psi_at_smallest=[float(v) for v in psi],
    )
    if report.passed:
        logger.debug(f"Assumptions hold on {y.size} probes")
    else:
        logger.warning(f"Assumption check failed: {'; '.join(report.failures())}")
    return report
