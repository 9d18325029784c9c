from typing import List, Optional

from pydantic import BaseModel, Field

from app.schemas.report_schemas import AssumptionReport, VIReport


class PolicyDecision(BaseModel):
    """Optimal controls at financial wealth x."""

    x: float
    y_star: float
    retired: bool
    c: float = Field(description="Consumption rate, goods per year")
    pi: float = Field(description="Amount held in the risky asset")
    V: float = Field(description="Value function J(y*) + y* x")


class PortfolioJump(BaseModel):
    """Pi(z_R+) - Pi(z_R-) from one-sided second derivatives and its closed form."""

    computed: float
    formula: float
    working_portfolio: float
    retired_portfolio: float

    @property
    def relative_error(self) -> float:
        scale = abs(self.formula) if self.formula else 1.0
        return abs(self.computed - self.formula) / scale


class ConsumptionJump(BaseModel):
    working: float = Field(description="I_{u_B}(z_R)")
    retired: float = Field(description="I_{u_A}(z_R)")
    jump: float = Field(description="I_{u_A}(z_R) - I_{u_B}(z_R)")
    has_jump: bool


class PolicyRow(BaseModel):
    y: float
    X: float
    c: float
    pi: float
    P: float
    human_wealth: float
    J: float


class ComparativeStaticRow(BaseModel):
    epsilon: float
    z_bar: Optional[float] = None
    z_R: Optional[float] = None
    D: Optional[float] = None
    x_R: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class ComparativeStaticTable(BaseModel):
    rows: List[ComparativeStaticRow]
    z_R_decreasing: bool
    x_R_increasing: bool


class SolutionSummary(BaseModel):
    scenario: str = ""
    n1: float
    n2: float
    merton: Optional[float] = None
    z_bar: float
    z_R: float
    D: float
    x_R: float
    assumptions: AssumptionReport
    smooth_pasting_value: float = Field(description="|P(z_R)|")
    smooth_pasting_slope: float = Field(description="|P'(z_R+)|")
    vi: Optional[VIReport] = None
    duality_gap: float = 0.0
    portfolio_jump: float
    consumption_jump: float
    elapsed_seconds: float = 0.0


class SweepRow(BaseModel):
    parameter: str
    value: float
    status: str = "ok"
    error: str = ""
    n1: Optional[float] = None
    n2: Optional[float] = None
    merton: Optional[float] = None
    z_bar: Optional[float] = None
    z_R: Optional[float] = None
    D: Optional[float] = None
    x_R: Optional[float] = None
    smooth_pasting_value: Optional[float] = None
    smooth_pasting_slope: Optional[float] = None
    duality_gap: Optional[float] = None
    portfolio_jump: Optional[float] = None
    consumption_jump: Optional[float] = None
    jump_flag: Optional[bool] = None
