from pydantic import BaseModel, ConfigDict, Field, model_validator


class MarketParams(BaseModel):
    """Market environment and wage rate; the [market] section of a scenario."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    r: float = Field(gt=0, description="Risk-free rate per year")
    mu: float = Field(description="Drift of the risky asset per year")
    sigma: float = Field(gt=0, description="Volatility of the risky asset per year")
    rho: float = Field(gt=0, description="Subjective discount rate per year")
    epsilon: float = Field(gt=0, description="Wage rate, goods per year")

    @property
    def theta(self) -> float:
        """Sharpe ratio (mu - r) / sigma."""
        return (self.mu - self.r) / self.sigma

    def with_updates(self, **changes: float) -> "MarketParams":
        """Validated copy with some fields replaced."""
        return MarketParams(**{**self.model_dump(), **changes})


class QuadraticRoots(BaseModel):
    """Roots of (theta^2/2) n^2 + (rho - r - theta^2/2) n - rho = 0."""

    model_config = ConfigDict(frozen=True)

    n1: float = Field(description="Positive root, always above one")
    n2: float = Field(description="Negative root")

    @model_validator(mode="after")
    def check_signs(self) -> "QuadraticRoots":
        if not self.n1 > 1.0:
            raise ValueError(f"n1 must exceed 1, got {self.n1}")
        if not self.n2 < 0.0:
            raise ValueError(f"n2 must be negative, got {self.n2}")
        return self


class MertonConstant(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float
    value: float

    @property
    def is_positive(self) -> bool:
        return self.value > 0.0
