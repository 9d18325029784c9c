from __future__ import annotations

import logging
from typing import Callable, Literal, Tuple

import numpy as np
from scipy.optimize import bisect, brentq

from app.shared.errors import BracketError

logger = logging.getLogger(__name__)

# scipy refuses rtol below 4 machine epsilons and a non-positive xtol
_MIN_RTOL = 4.0 * float(np.finfo(float).eps)
_XTOL = float(np.finfo(float).tiny)

LOWER_CAP = 1e-12
UPPER_CAP = 1e12


def expand_bracket(
    fn: Callable[[float], float],
    start: float,
    *,
    increasing: bool = True,
    lower_cap: float = LOWER_CAP,
    upper_cap: float = UPPER_CAP,
    factor: float = 2.0,
) -> Tuple[float, float]:
    """
    Geometric search for an interval [lo, hi] on which a monotone ``fn``
    changes sign.

    Starting from ``start`` the interval is pushed up (or down) by ``factor``
    until the sign flips. The caps are evaluated exactly once before giving up.
    """
    value = fn(start)
    if value == 0.0:
        return start, start

    move_up = (value < 0.0) == increasing
    lo = hi = start
    while True:
        if move_up:
            if hi >= upper_cap:
                raise BracketError(
                    f"No sign change found up to {upper_cap:g} (last value {value:g})"
                )
            lo, hi = hi, min(hi * factor, upper_cap)
            current = fn(hi)
        else:
            if lo <= lower_cap:
                raise BracketError(
                    f"No sign change found down to {lower_cap:g} (last value {value:g})"
                )
            hi, lo = lo, max(lo / factor, lower_cap)
            current = fn(lo)
        if current == 0.0 or (current > 0.0) != (value > 0.0):
            logger.debug(f"Bracket found: [{lo:.6g}, {hi:.6g}]")
            return lo, hi


def find_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    rtol: float = 1e-12,
    method: Literal["brent", "bisect"] = "brent",
    maxiter: int = 500,
) -> float:
    """Solve ``fn = 0`` on a sign-changing bracket with a relative tolerance."""
    if lo == hi:
        return lo
    solver = brentq if method == "brent" else bisect
    try:
        root, result = solver(
            fn,
            lo,
            hi,
            xtol=_XTOL,
            rtol=max(rtol, _MIN_RTOL),
            maxiter=maxiter,
            full_output=True,
            disp=False,
        )
    except ValueError as e:
        raise BracketError(f"Invalid bracket [{lo:g}, {hi:g}]: {str(e)}")
    if not result.converged:
        raise BracketError(
            f"Root solver stopped after {result.iterations} iterations "
            f"near {root:.17g}"
        )
    return float(root)


def solve_monotone(
    fn: Callable[[float], float],
    start: float,
    *,
    increasing: bool = True,
    rtol: float = 1e-12,
    method: Literal["brent", "bisect"] = "brent",
    lower_cap: float = LOWER_CAP,
    upper_cap: float = UPPER_CAP,
) -> float:
    """Bracket then solve a strictly monotone equation ``fn(y) = 0`` on y > 0."""
    lo, hi = expand_bracket(
        fn,
        start,
        increasing=increasing,
        lower_cap=lower_cap,
        upper_cap=upper_cap,
    )
    return find_root(fn, lo, hi, rtol=rtol, method=method)
