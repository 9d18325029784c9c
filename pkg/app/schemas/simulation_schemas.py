from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SimulationConfig(BaseModel):
    """Monte Carlo settings for the dual process."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_paths: int = Field(default=100_000, ge=1)
    dt: float = Field(default=1.0 / 252.0, gt=0, description="Time step in years")
    horizon: float = Field(default=200.0, gt=0, description="Truncation T in years")
    seed: int = Field(default=20240101, ge=0, lt=2**64)
    antithetic: bool = True

    @model_validator(mode="after")
    def check_consistency(self) -> "SimulationConfig":
        if self.horizon < self.dt:
            raise ValueError(f"horizon ({self.horizon}) must be >= dt ({self.dt})")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("n_paths must be even when antithetic pairing is on")
        return self

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    def with_updates(self, **changes) -> "SimulationConfig":
        return SimulationConfig(**{**self.model_dump(), **changes})


class EstimateResult(BaseModel):
    """
    Truncated estimate over [0, T] plus the discounted tail completion on
    paths still running at T.
    """

    estimate: float
    std_error: float
    tail: float = 0.0
    completed: float
    completed_std_error: float
    unstopped_fraction: float = 0.0
    n_samples: int
    warning: Optional[str] = None
    inconclusive: bool = False

    def within(self, reference: float, n_se: float = 3.0) -> bool:
        """Completed estimate within ``n_se`` standard errors of ``reference``."""
        return abs(self.completed - reference) <= n_se * self.completed_std_error


class BudgetReport(BaseModel):
    x: float
    y_star: float
    retired_at_start: bool
    estimate: float = Field(description="E int_0^T xi_t (c_t - eps 1{t < tau_R}) dt")
    std_error: float
    tail: float = Field(description="E xi_T X_T, the wealth still held at T")
    gap: float = Field(description="|estimate - x|")
    corrected_gap: float = Field(description="|estimate + tail - x|")
    warning: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.gap <= 3.0 * self.std_error + abs(self.tail)


class TransversalityRow(BaseModel):
    horizon: float
    value: float = Field(description="e^{-rho T} mean P(Y_T)")
    std_error: float


class TransversalityTable(BaseModel):
    rows: List[TransversalityRow]

    @property
    def decreasing(self) -> bool:
        """Strict decrease over the last three horizons (an all-zero tail counts)."""
        tail = [row.value for row in self.rows[-3:]]
        return all(a > b or a == b == 0.0 for a, b in zip(tail, tail[1:]))

    @property
    def decay_ratio(self) -> float:
        first = self.rows[0].value
        return self.rows[-1].value / first if first else 0.0
