from __future__ import annotations

from typing import Callable, Iterable, List

import numpy as np


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Log-spaced grid from lo to hi inclusive (fixed generation, reproducible)."""
    if lo <= 0.0 or hi <= lo:
        raise ValueError(f"Invalid log grid bounds [{lo}, {hi}]")
    if count < 2:
        raise ValueError("A log grid needs at least two points")
    return np.logspace(np.log10(lo), np.log10(hi), count)


def parse_float_list(raw: str | Iterable[float]) -> List[float]:
    """Accept '0.5,1,2' or an iterable of numbers."""
    if isinstance(raw, str):
        parts = [p.strip() for p in raw.split(",")]
        return [float(p) for p in parts if p]
    return [float(v) for v in raw]


def central_first(fn: Callable[[float], float], y: float, h: float) -> float:
    """Fourth-order central difference for the first derivative."""
    return (-fn(y + 2 * h) + 8 * fn(y + h) - 8 * fn(y - h) + fn(y - 2 * h)) / (12 * h)


def central_second(fn: Callable[[float], float], y: float, h: float) -> float:
    """Fourth-order central difference for the second derivative."""
    return (
        -fn(y + 2 * h)
        + 16 * fn(y + h)
        - 30 * fn(y)
        + 16 * fn(y - h)
        - fn(y - 2 * h)
    ) / (12 * h * h)


def richardson_derivative(fn: Callable[[float], float], y: float, h: float) -> float:
    """
    Richardson-extrapolated central difference using steps h and h/2.

    Both second-order estimates are combined as (4 D(h/2) - D(h)) / 3.
    """

    def _central(step: float) -> float:
        return (fn(y + step) - fn(y - step)) / (2 * step)

    coarse = _central(h)
    fine = _central(h / 2)
    return (4 * fine - coarse) / 3
