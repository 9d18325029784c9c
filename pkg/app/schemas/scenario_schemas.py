from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.market_schemas import MarketParams
from app.schemas.simulation_schemas import SimulationConfig
from app.shared.helpers.grid_helper import parse_float_list

MarketSection = MarketParams


class PreferencesSection(BaseModel):
    """[preferences]: u_B = u - l, u_A = u(k c + b) with a CRRA base u."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["crra"] = "crra"
    gamma: float = Field(gt=0, description="Relative risk aversion, != 1")
    l: float = Field(default=0.0, ge=0, description="Disutility of work")
    k: float = Field(default=1.0, ge=1, description="Leisure scale after retirement")
    b: float = Field(
        default=0.0, ge=0, description="Consumption shift after retirement"
    )

    @field_validator("gamma")
    @classmethod
    def gamma_not_one(cls, v: float) -> float:
        if v == 1.0:
            raise ValueError("gamma = 1 (log utility) is not supported")
        return v


class NumericsSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    quad_tol: Optional[float] = Field(default=None, gt=0, lt=1e-2)
    root_tol: Optional[float] = Field(default=None, gt=0, lt=1e-2)
    probe_min: float = Field(default=1e-6, gt=0)
    probe_max: float = Field(default=1e6, gt=0)
    probe_count: int = Field(default=400, ge=2)
    table_span: float = Field(default=50.0, gt=1)
    table_count: int = Field(default=400, ge=2)
    vi_probe_count: int = Field(default=64, ge=2)
    wealth_probes: Optional[List[float]] = None

    @field_validator("wealth_probes", mode="before")
    @classmethod
    def split_probes(cls, v):
        if isinstance(v, str):
            return parse_float_list(v)
        return v

    @model_validator(mode="after")
    def check_probe_bounds(self) -> "NumericsSection":
        if self.probe_max <= self.probe_min:
            raise ValueError("probe_max must exceed probe_min")
        return self


class SimulationSection(SimulationConfig):
    """[simulation]: path settings plus the probes the verify command uses."""

    probe_y: float = Field(default=1.0, gt=0)
    transversality_horizons: List[float] = Field(
        default_factory=lambda: [10.0, 40.0, 160.0]
    )

    @field_validator("transversality_horizons", mode="before")
    @classmethod
    def split_horizons(cls, v):
        if isinstance(v, str):
            return parse_float_list(v)
        return v

    @field_validator("transversality_horizons")
    @classmethod
    def horizons_increasing(cls, v: List[float]) -> List[float]:
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("transversality_horizons must be strictly increasing")
        if v[0] <= 0.0:
            raise ValueError("transversality_horizons must be positive")
        return v

    def to_config(self) -> SimulationConfig:
        return SimulationConfig(
            **self.model_dump(exclude={"probe_y", "transversality_horizons"})
        )


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    market: MarketSection
    preferences: PreferencesSection
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    simulation: Optional[SimulationSection] = None

    def with_parameter(self, parameter: str, value: float) -> "ScenarioConfig":
        """Copy with one market or preference parameter replaced (used by sweeps)."""
        if parameter == "epsilon":
            market = self.market.with_updates(epsilon=value)
            return self.model_copy(update={"market": market})
        if parameter in ("l", "k", "b", "gamma"):
            data = {**self.preferences.model_dump(), parameter: value}
            return self.model_copy(update={"preferences": PreferencesSection(**data)})
        raise ValueError(f"Unknown sweep parameter {parameter!r}")
