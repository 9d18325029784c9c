import logging
import time
from dataclasses import dataclass, field
from typing import List

from pydantic import ValidationError

from app.config.settings import Settings
from app.engines.felicity_engine import PreferencePair, crra, verify_assumptions
from app.engines.market_engine import merton_constant, solve_characteristic_roots
from app.engines.policy_engine import PolicyEngine, build_policy
from app.engines.retirement_engine import RetirementEngine
from app.schemas.scenario_schemas import ScenarioConfig
from app.schemas.solution_schemas import PolicyRow, SolutionSummary
from app.shared.errors import (
    AssumptionViolationError,
    ConfigError,
    DualLifeError,
    NumericalError,
)
from app.shared.helpers.grid_helper import log_grid

logger = logging.getLogger(__name__)

# multiples of x_R probed by the duality check when the scenario lists none
DEFAULT_WEALTH_MULTIPLES = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0)


@dataclass
class ScenarioSolution:
    config: ScenarioConfig
    policy: PolicyEngine
    summary: SolutionSummary
    policy_rows: List[PolicyRow] = field(default_factory=list)


class ScenarioService:
    """
    Solves one scenario end to end: roots, assumption checks, free boundary,
    dual value, policies and the built-in residual checks.
    """

    def __init__(self, settings: Settings):
        self.settings = settings

    def quad_tol(self, config: ScenarioConfig) -> float:
        return config.numerics.quad_tol or self.settings.DEFAULT_QUAD_TOL

    def root_tol(self, config: ScenarioConfig) -> float:
        return config.numerics.root_tol or self.settings.DEFAULT_ROOT_TOL

    def build_pair(self, config: ScenarioConfig) -> PreferencePair:
        prefs = config.preferences
        return PreferencePair.from_example_family(
            crra(prefs.gamma), prefs.l, prefs.k, prefs.b
        )

    def solve(self, config: ScenarioConfig, *, full: bool = True) -> ScenarioSolution:
        """
        Solve ``config``. With ``full`` the variational inequality check and
        the policy table are computed as well.
        """
        try:
            return self._solve(config, full)
        except DualLifeError:
            raise
        except ValidationError as e:
            raise ConfigError(f"Invalid scenario values: {str(e)}")
        except Exception as e:
            logger.error(f"Error solving scenario {config.name!r}: {str(e)}")
            raise NumericalError(f"Unexpected failure while solving: {str(e)}")

    def wealth_probes(self, config: ScenarioConfig, x_R: float) -> List[float]:
        if config.numerics.wealth_probes:
            return list(config.numerics.wealth_probes)
        return [m * x_R for m in DEFAULT_WEALTH_MULTIPLES]

    # ---------------------------------------------------------------------
    # Internal helpers
    # ---------------------------------------------------------------------

    def _solve(self, config: ScenarioConfig, full: bool) -> ScenarioSolution:
        started = time.perf_counter()
        market = config.market
        numerics = config.numerics
        logger.info(f"Solving scenario {config.name!r}")

        roots = solve_characteristic_roots(market)
        pair = self.build_pair(config)
        merton = merton_constant(market, config.preferences.gamma)
        if not merton.is_positive:
            raise AssumptionViolationError(
                f"Merton constant M={merton.value:.6g} is not positive: the CRRA "
                "dual value is infinite"
            )

        probes = log_grid(numerics.probe_min, numerics.probe_max, numerics.probe_count)
        assumptions = verify_assumptions(pair, roots, probes, market.epsilon)
        if not assumptions.passed:
            raise AssumptionViolationError(
                "Assumptions fail: " + "; ".join(assumptions.failures())
            )

        policy = build_policy(
            market,
            pair,
            quad_tol=self.quad_tol(config),
            root_tol=self.root_tol(config),
            max_doublings=self.settings.MAX_TAIL_DOUBLINGS,
        )
        solution = policy.solution
        z_R = solution.z_R
        span = numerics.table_span

        vi = None
        rows: List[PolicyRow] = []
        if full:
            engine = RetirementEngine(
                solution.kernel, pair, market.epsilon, root_tol=self.root_tol(config)
            )
            vi = engine.verify_variational_inequality(
                solution, log_grid(z_R / span, z_R * span, numerics.vi_probe_count)
            )
            rows = policy.policy_table(
                log_grid(z_R / span, z_R * span, numerics.table_count)
            )

        summary = SolutionSummary(
            scenario=config.name,
            n1=roots.n1,
            n2=roots.n2,
            merton=merton.value,
            z_bar=solution.z_bar,
            z_R=z_R,
            D=solution.D,
            x_R=policy.x_R,
            assumptions=assumptions,
            smooth_pasting_value=solution.smooth_pasting_value,
            smooth_pasting_slope=solution.smooth_pasting_slope,
            vi=vi,
            duality_gap=policy.duality_gap(self.wealth_probes(config, policy.x_R)),
            portfolio_jump=policy.portfolio_jump().computed,
            consumption_jump=policy.consumption_jump().jump,
            elapsed_seconds=time.perf_counter() - started,
        )
        logger.info(
            f"Scenario {config.name!r} solved in {summary.elapsed_seconds:.2f}s: "
            f"z_R={summary.z_R:.12g}, x_R={summary.x_R:.12g}"
        )
        return ScenarioSolution(
            config=config, policy=policy, summary=summary, policy_rows=rows
        )
