import logging
import math
from typing import Optional

from pydantic import ValidationError

from app.config.settings import Settings
from app.engines.crra_oracle_engine import (
    CrraScenario,
    crra_free_boundary,
    crra_gamma_IB,
    crra_retired_wealth,
    crra_xi_uA,
    crra_xi_uB,
)
from app.engines.dual_engine import Side
from app.engines.market_engine import characteristic_polynomial
from app.engines.montecarlo_engine import MonteCarloEngine
from app.schemas.report_schemas import VerificationReport
from app.schemas.scenario_schemas import ScenarioConfig, SimulationSection
from app.services.scenario_service import ScenarioService, ScenarioSolution
from app.shared.errors import ConfigError, DualLifeError, NumericalError
from app.shared.helpers.grid_helper import log_grid, richardson_derivative

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-7
OPERATOR_TOL = 1e-8
DERIVATIVE_TOL = 1e-5
SMOOTH_PASTING_TOL = 1e-8
DUALITY_TOL = 1e-8
ROUND_TRIP_TOL = 1e-9
JUMP_TOL = 1e-6
ORACLE_PROBES = 20


class VerificationService:
    """
    Cross-checks a solved scenario: built-in residuals always, the CRRA
    closed forms with ``oracle="crra"`` and Monte Carlo with ``simulate``.
    """

    def __init__(self, scenario_service: ScenarioService, settings: Settings):
        self.scenario_service = scenario_service
        self.settings = settings

    def verify(
        self,
        config: ScenarioConfig,
        *,
        oracle: Optional[str] = None,
        simulate: bool = False,
    ) -> VerificationReport:
        if oracle not in (None, "crra"):
            raise ConfigError(f"Unknown oracle {oracle!r}; only 'crra' is available")
        solved = self.scenario_service.solve(config)
        report = VerificationReport()
        try:
            self._residual_checks(solved, report)
            if oracle == "crra":
                self._oracle_checks(solved, report)
            if simulate:
                self._simulation_checks(solved, report)
        except DualLifeError:
            raise
        except ValidationError as e:
            raise ConfigError(f"Invalid simulation settings: {str(e)}")
        except Exception as e:
            logger.error(f"Error verifying scenario {config.name!r}: {str(e)}")
            raise NumericalError(f"Unexpected failure while verifying: {str(e)}")

        failed = [c.name for c in report.checks if c.status.value != "pass"]
        if failed:
            logger.warning(
                f"{len(failed)} of {len(report.checks)} checks did not pass: {failed}"
            )
        else:
            logger.info(f"All {len(report.checks)} checks passed")
        return report

    # ---------------------------------------------------------------------
    # Internal helpers
    # ---------------------------------------------------------------------

    def _residual_checks(
        self, solved: ScenarioSolution, report: VerificationReport
    ) -> None:
        summary = solved.summary
        policy = solved.policy
        market = solved.config.market
        scale = max(1.0, market.epsilon / market.r)

        for name, value in (
            ("smooth_pasting_value", summary.smooth_pasting_value),
            ("smooth_pasting_slope", summary.smooth_pasting_slope),
        ):
            report.add(name, value, 0.0, SMOOTH_PASTING_TOL * scale, relative=False)

        if summary.vi is not None:
            report.add(
                "variational_inequality",
                summary.vi.max_continuation_residual,
                0.0,
                summary.vi.tolerance,
                relative=False,
                passed=summary.vi.passed,
                note=(
                    "max h on stopping probes "
                    f"{summary.vi.max_stopping_violation:.3g}"
                ),
            )

        report.add("duality_gap", summary.duality_gap, 0.0, DUALITY_TOL, relative=False)

        worst = 0.0
        for x in self.scenario_service.wealth_probes(solved.config, policy.x_R):
            y_star = policy.marginal_value_of_wealth(x)
            worst = max(worst, abs(policy.wealth(y_star) - x) / max(1.0, abs(x)))
        report.add("wealth_round_trip", worst, 0.0, ROUND_TRIP_TOL, relative=False)

        jump = policy.portfolio_jump()
        report.add("portfolio_jump", jump.computed, jump.formula, JUMP_TOL)

    def _oracle_checks(
        self, solved: ScenarioSolution, report: VerificationReport
    ) -> None:
        config = solved.config
        prefs = config.preferences
        market = config.market
        policy = solved.policy
        solution = policy.solution
        kernel = solution.kernel
        pair = policy.pair

        scenario = CrraScenario.build(market, prefs.gamma, prefs.l, prefs.k, prefs.b)
        boundary = crra_free_boundary(scenario)

        roots = scenario.roots
        residual = max(
            abs(characteristic_polynomial(market, roots.n1)),
            abs(characteristic_polynomial(market, roots.n2)),
        )
        report.add(
            "characteristic_roots", residual, 0.0, 1e-12 * market.rho, relative=False
        )

        note = f"case {boundary.case}"
        if boundary.D_display is not None:
            note += f", printed display mismatch {boundary.display_mismatch:.3g}"
        report.add("z_bar", solution.z_bar, boundary.z_bar, ORACLE_TOL)
        report.add("z_R", solution.z_R, boundary.z_R, ORACLE_TOL, note=note)
        report.add("D", solution.D, boundary.D, ORACLE_TOL, note=note)
        report.add("x_R", policy.x_R, boundary.x_R, ORACLE_TOL)
        if prefs.k == 1.0 and prefs.b == 0.0:
            closed = (prefs.l / market.epsilon) * (roots.n1 - 1.0) / roots.n1
            report.add("z_R_closed_form", solution.z_R, closed, ORACLE_TOL)

        probes = log_grid(1e-2, 1e2, ORACLE_PROBES)
        away_from_cutoff = [
            float(y)
            for y in probes
            if math.isinf(scenario.cutoff) or abs(y / scenario.cutoff - 1.0) > 1e-6
        ]
        self._worst_relative(
            report,
            "xi_u_B",
            lambda y: kernel.xi(pair.u_B.conjugate, y),
            lambda y: crra_xi_uB(scenario, y),
            probes,
            OPERATOR_TOL,
        )
        self._worst_relative(
            report,
            "gamma_I_B",
            lambda y: kernel.gamma(pair.u_B.inverse_marginal, y),
            lambda y: crra_gamma_IB(scenario, y),
            probes,
            OPERATOR_TOL,
        )
        self._worst_relative(
            report,
            "xi_u_A",
            policy.dual.after.value,
            lambda y: crra_xi_uA(scenario, y),
            away_from_cutoff,
            ORACLE_TOL,
        )
        self._worst_relative(
            report,
            "retired_wealth",
            policy.retired_wealth,
            lambda y: crra_retired_wealth(scenario, y),
            away_from_cutoff,
            ORACLE_TOL,
        )
        self._worst_relative(
            report,
            "xi_derivative_identity",
            lambda y: richardson_derivative(
                lambda t: kernel.xi(pair.u_B.conjugate, t), y, 1e-3 * y
            ),
            lambda y: -kernel.gamma(pair.u_B.inverse_marginal, y),
            probes,
            DERIVATIVE_TOL,
        )

        if prefs.b == 0.0:
            retired_probes = [solution.z_R * f for f in (0.1, 0.25, 0.5, 0.9)]
            self._worst_relative(
                report,
                "merton_retired_portfolio",
                lambda y: policy.portfolio(y, Side.RETIRED),
                lambda y: policy.merton_retired_portfolio(policy.retired_wealth(y)),
                retired_probes,
                ORACLE_TOL,
            )

    def _simulation_checks(
        self, solved: ScenarioSolution, report: VerificationReport
    ) -> None:
        section = solved.config.simulation or SimulationSection()
        settings = self.settings
        engine = MonteCarloEngine(
            solved.config.market,
            section.to_config(),
            block_size=settings.MC_BLOCK_SIZE,
            chunk_steps=settings.MC_CHUNK_STEPS,
            workers=settings.simulation_workers,
            max_tail_share=settings.MC_MAX_TAIL_SHARE,
        )
        policy = solved.policy
        solution = policy.solution
        y = section.probe_y

        analytic = solution.labor_value(y)
        coarse, fine = engine.labor_value_convergence(solution, y)
        report.add(
            "mc_labor_value",
            coarse.completed,
            analytic,
            3.0 * coarse.completed_std_error,
            relative=False,
            passed=coarse.within(analytic),
            inconclusive=coarse.inconclusive,
            note=coarse.warning or "",
        )
        spread = 3.0 * math.hypot(coarse.completed_std_error, fine.completed_std_error)
        report.add(
            "mc_labor_value_half_step",
            fine.completed,
            coarse.completed,
            spread,
            relative=False,
            inconclusive=fine.inconclusive,
        )

        market = solved.config.market
        wage_scale = market.epsilon / market.r
        for label, x in (("zero", 0.0), ("x_R", policy.x_R)):
            budget = engine.verify_budget_constraint(policy, x)
            report.add(
                f"mc_budget_{label}",
                budget.estimate,
                x,
                3.0 * budget.std_error + abs(budget.tail),
                relative=False,
                passed=budget.passed,
                inconclusive=abs(budget.tail)
                > settings.MC_MAX_TAIL_SHARE * max(abs(x), wage_scale),
                note=budget.warning or "",
            )

        for horizon in (1.0, 10.0):
            martingale = engine.state_price_martingale(horizon)
            report.add(
                f"mc_martingale_T{horizon:g}",
                martingale.estimate,
                1.0,
                3.0 * martingale.std_error,
                relative=False,
            )

        table = engine.estimate_transversality(
            solution, y, section.transversality_horizons
        )
        report.add(
            "mc_transversality",
            table.decay_ratio,
            0.0,
            1.0,
            relative=False,
            passed=table.decreasing,
            note=" ".join(f"T={row.horizon:g}:{row.value:.4g}" for row in table.rows),
        )

    def _worst_relative(
        self, report, name, computed_fn, reference_fn, probes, tol
    ) -> None:
        worst = 0.0
        for y in probes:
            computed = float(computed_fn(float(y)))
            reference = float(reference_fn(float(y)))
            worst = max(worst, abs(computed - reference) / max(abs(reference), 1e-300))
        note = f"worst over {len(probes)} probes"
        report.add(name, worst, 0.0, tol, relative=False, note=note)
