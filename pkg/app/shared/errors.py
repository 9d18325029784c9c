"""
Domain errors.

Every error carries a human readable ``detail`` and the process ``exit_code``
the command layer returns for it (the CLI counterpart of an HTTP status).
"""

from __future__ import annotations

from typing import Optional


class DualLifeError(Exception):
    """Base error for the solver; defaults to a numeric failure."""

    exit_code: int = 3

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return self.detail


class ConfigError(DualLifeError):
    """Malformed or invalid scenario input."""

    exit_code = 1


class InvalidPreferenceError(ConfigError):
    """Preference parameters outside the supported family."""


class InfeasibleWealthError(ConfigError):
    """Wealth at or below the natural borrowing limit -eps/r."""


class AssumptionViolationError(DualLifeError):
    """A modelling assumption fails for the scenario."""

    exit_code = 2


class DegenerateMarketError(AssumptionViolationError):
    """Zero Sharpe ratio: the dual process has no diffusion."""


class NumericalError(DualLifeError):
    """A numerical procedure did not deliver the requested accuracy."""

    exit_code = 3


class QuadratureError(NumericalError):
    """Semi-infinite quadrature whose tail failed to decay."""

    def __init__(self, detail: str, partial_estimate: Optional[float] = None) -> None:
        super().__init__(detail)
        self.partial_estimate = partial_estimate


class BracketError(NumericalError):
    """No sign change found inside the search caps."""


class ProbeTooCloseError(NumericalError):
    """Finite-difference stencil would straddle a kink."""


class VerificationFailedError(NumericalError):
    """At least one verification check failed or was inconclusive."""
