import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

from pydantic import ValidationError

from app.schemas.scenario_schemas import ScenarioConfig
from app.schemas.solution_schemas import SweepRow
from app.services.scenario_service import ScenarioService
from app.shared.errors import ConfigError, DualLifeError

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("epsilon", "l", "k", "b", "gamma")


@dataclass
class SweepResult:
    parameter: str
    rows: List[SweepRow]
    z_R_decreasing: Optional[bool] = None
    x_R_increasing: Optional[bool] = None


class SweepService:
    """Solves a scenario once per parameter value; failed rows never stop a sweep."""

    def __init__(self, scenario_service: ScenarioService):
        self.scenario_service = scenario_service

    def run(
        self, config: ScenarioConfig, parameter: str, values: Sequence[float]
    ) -> SweepResult:
        if parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"Sweep parameter must be one of {', '.join(SWEEP_PARAMETERS)}, "
                f"got {parameter!r}"
            )
        if not values:
            raise ConfigError("Sweep needs at least one value")

        rows = [self._row(config, parameter, float(v)) for v in values]
        result = SweepResult(parameter=parameter, rows=rows)
        if parameter == "epsilon":
            result.z_R_decreasing, result.x_R_increasing = _monotonicity(rows)
            logger.info(
                f"Wage sweep: z_R decreasing={result.z_R_decreasing}, "
                f"x_R increasing={result.x_R_increasing}"
            )
        return result

    def _row(self, config: ScenarioConfig, parameter: str, value: float) -> SweepRow:
        try:
            solved = self.scenario_service.solve(
                config.with_parameter(parameter, value), full=False
            )
        except ValidationError as e:
            detail = "; ".join(err["msg"] for err in e.errors())
            logger.warning(f"Sweep row {parameter}={value:g} rejected: {detail}")
            return SweepRow(
                parameter=parameter, value=value, status="failed", error=detail
            )
        except DualLifeError as e:
            logger.warning(f"Sweep row {parameter}={value:g} failed: {e.detail}")
            return SweepRow(
                parameter=parameter, value=value, status="failed", error=e.detail
            )

        summary = solved.summary
        jump = solved.policy.consumption_jump()
        return SweepRow(
            parameter=parameter,
            value=value,
            n1=summary.n1,
            n2=summary.n2,
            merton=summary.merton,
            z_bar=summary.z_bar,
            z_R=summary.z_R,
            D=summary.D,
            x_R=summary.x_R,
            smooth_pasting_value=summary.smooth_pasting_value,
            smooth_pasting_slope=summary.smooth_pasting_slope,
            duality_gap=summary.duality_gap,
            portfolio_jump=summary.portfolio_jump,
            consumption_jump=jump.jump,
            jump_flag=jump.has_jump,
        )


def _monotonicity(rows: List[SweepRow]) -> tuple:
    """Flags judged on the rows before the first failure; None with fewer than two."""
    prefix = []
    for row in rows:
        if row.status != "ok":
            break
        prefix.append(row)
    if len(prefix) < 2:
        return None, None
    pairs = list(zip(prefix, prefix[1:]))
    return (
        all(a.z_R > b.z_R for a, b in pairs),
        all(a.x_R < b.x_R for a, b in pairs),
    )
