"""
Monte Carlo engine: simulation of the dual process Y_t = y e^{rho t} xi_t.

log Y advances exactly by (rho - r - theta^2/2) dt - theta sqrt(dt) Z, so the
only discretisation errors are the trapezoidal time integral and stopping
detected at grid points.

Paths are simulated in fixed-size blocks. Block i draws from
SeedSequence([seed, i]) and blocks are reduced in index order, so estimates
are bit-identical for any number of workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from app.engines.policy_engine import PolicyEngine
from app.engines.retirement_engine import RetirementSolution
from app.schemas.market_schemas import MarketParams
from app.schemas.simulation_schemas import (
    BudgetReport,
    EstimateResult,
    SimulationConfig,
    TransversalityRow,
    TransversalityTable,
)

logger = logging.getLogger(__name__)

PathFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

_UNSTOPPED_WARN = 0.05
_TAIL_WARN = 0.01


@dataclass
class DualPathState:
    """Per-path state carried between time chunks."""

    t: float
    Y: np.ndarray
    xi: np.ndarray
    stopped: np.ndarray


@dataclass(frozen=True)
class PathFunctional:
    """
    E[ int_0^T e^{-rho t} running(Y_t, stopped_t) dt
       + e^{-rho T} terminal(Y_T, stopped_T) ].

    ``stopped_t`` turns true once Y has been at or below ``stop_level`` on the
    grid. With ``absorbing`` set, a block ends early when all its paths stopped
    (running and terminal must then vanish on stopped paths).
    """

    running: Optional[PathFunction] = None
    terminal: Optional[PathFunction] = None
    stop_level: Optional[float] = None
    absorbing: bool = False


@dataclass(frozen=True)
class _BlockSamples:
    integral: np.ndarray
    tail: np.ndarray
    unstopped: int
    paths: int


class LogGridTable:
    """Cubic spline of fn over log y, clipped to [lo, hi]."""

    def __init__(
        self,
        fn: Callable[[float], float],
        lo: float,
        hi: float,
        count: int = 256,
        *,
        log_values: bool = False,
    ):
        self.lo = lo
        self.hi = hi
        self.log_values = log_values
        nodes = np.linspace(math.log(lo), math.log(hi), count)
        values = np.array([fn(math.exp(v)) for v in nodes])
        if log_values:
            values = np.log(values)
        self._spline = CubicSpline(nodes, values)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        x = np.log(np.clip(y, self.lo, self.hi))
        values = self._spline(x)
        return np.exp(values) if self.log_values else values


class MonteCarloEngine:
    def __init__(
        self,
        market: MarketParams,
        config: SimulationConfig,
        *,
        block_size: int = 4096,
        chunk_steps: int = 256,
        workers: int = 1,
        max_tail_share: float = 0.25,
    ):
        self.market = market
        self.config = config
        self.block_size = max(2, block_size - block_size % 2)
        self.chunk_steps = chunk_steps
        self.workers = max(1, workers)
        self.max_tail_share = max_tail_share

    # ---------------------------------------------------------------------
    # Public API
    # ---------------------------------------------------------------------

    def simulate_labor_value(
        self,
        solution: RetirementSolution,
        y: float,
        config: Optional[SimulationConfig] = None,
    ) -> EstimateResult:
        """
        E int_0^{tau_R} e^{-rho t} h(Y_t) dt, completed by e^{-rho T} P(Y_T)
        on paths still running at T.
        """
        config = config or self.config
        if y <= solution.z_R:
            return EstimateResult(
                estimate=0.0,
                std_error=0.0,
                completed=0.0,
                completed_std_error=0.0,
                n_samples=config.n_paths,
            )

        labor = self._labor_value_table(solution, y)
        eps = solution.eps
        pair = solution.pair

        def running(Y: np.ndarray, stopped: np.ndarray) -> np.ndarray:
            return np.where(stopped, 0.0, pair.conjugate_gap(Y) + eps * Y)

        def terminal(Y: np.ndarray, stopped: np.ndarray) -> np.ndarray:
            return np.where(stopped, 0.0, labor(Y))

        functional = PathFunctional(
            running=running, terminal=terminal, stop_level=solution.z_R, absorbing=True
        )
        result = self._estimate(y, functional, config)
        logger.info(
            f"Labor value at y={y:g}: {result.completed:.6g} "
            f"+/- {result.completed_std_error:.2g} "
            f"(truncated {result.estimate:.6g})"
        )
        return result

    def labor_value_convergence(
        self, solution: RetirementSolution, y: float
    ) -> Tuple[EstimateResult, EstimateResult]:
        """Estimates at dt and dt/2 with the same seed."""
        coarse = self.simulate_labor_value(solution, y)
        fine = self.simulate_labor_value(
            solution, y, self.config.with_updates(dt=0.5 * self.config.dt)
        )
        return coarse, fine

    def verify_budget_constraint(self, policy: PolicyEngine, x: float) -> BudgetReport:
        """
        E int_0^T xi_t (c_t - eps 1{t < tau_R}) dt against x, with the wealth
        still held at T, E[xi_T X_T], as the tail.
        """
        y_star = policy.marginal_value_of_wealth(x)
        z_R = policy.z_R
        pair = policy.pair
        eps = self.market.epsilon
        working_wealth = LogGridTable(policy.wealth, z_R, max(y_star, z_R) * 1e8)
        retired_wealth = LogGridTable(
            policy.retired_wealth,
            min(y_star, z_R) * 1e-12,
            max(y_star, z_R) * 1e8,
            log_values=True,
        )

        def running(Y: np.ndarray, stopped: np.ndarray) -> np.ndarray:
            spend = np.where(
                stopped,
                pair.u_A.inverse_marginal(Y),
                pair.u_B.inverse_marginal(Y) - eps,
            )
            return Y / y_star * spend

        def terminal(Y: np.ndarray, stopped: np.ndarray) -> np.ndarray:
            held = np.where(stopped, retired_wealth(Y), working_wealth(Y))
            return Y / y_star * held

        functional = PathFunctional(running=running, terminal=terminal, stop_level=z_R)
        result = self._estimate(y_star, functional, self.config)
        report = BudgetReport(
            x=x,
            y_star=y_star,
            retired_at_start=x >= policy.x_R,
            estimate=result.estimate,
            std_error=result.std_error,
            tail=result.tail,
            gap=abs(result.estimate - x),
            corrected_gap=abs(result.completed - x),
            warning=result.warning,
        )
        logger.info(
            f"Budget at x={x:g}: {report.estimate:.6g} +/- {report.std_error:.2g}, "
            f"tail {report.tail:.3g}"
        )
        return report

    def estimate_transversality(
        self, solution: RetirementSolution, y: float, horizons: Sequence[float]
    ) -> TransversalityTable:
        """e^{-rho T} E[P(Y_T)] per horizon, from exact draws of Y_T."""
        values = [float(h) for h in horizons]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"Horizons must be increasing: {values}")
        labor = self._labor_value_table(solution, y, decades=12)
        z_R = solution.z_R

        def labor_or_zero(Y: np.ndarray) -> np.ndarray:
            return np.where(Y <= z_R, 0.0, labor(Y))

        rows: List[TransversalityRow] = []
        for horizon in values:
            samples = self._terminal_samples(y, horizon, labor_or_zero)
            mean, se = _mean_and_error(samples)
            rows.append(TransversalityRow(horizon=horizon, value=mean, std_error=se))
        return TransversalityTable(rows=rows)

    def simulate_resolvent(
        self,
        f: Callable[[np.ndarray], np.ndarray],
        y: float,
        tail: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> EstimateResult:
        """Feynman-Kac estimate of Xi_f(y); ``tail`` (Xi_f itself) completes it."""
        functional = PathFunctional(
            running=lambda Y, stopped: f(Y),
            terminal=(lambda Y, stopped: tail(Y)) if tail is not None else None,
        )
        return self._estimate(y, functional, self.config)

    def state_price_martingale(self, horizon: float) -> EstimateResult:
        """mean of xi_T e^{rT}, which should be 1."""
        growth = math.exp(self.market.r * horizon)

        # _terminal_samples applies e^{-rho T}; with y = 1, xi_T = e^{-rho T} Y_T
        def scaled_density(Y: np.ndarray) -> np.ndarray:
            return growth * Y

        samples = self._terminal_samples(1.0, horizon, scaled_density)
        mean, se = _mean_and_error(samples)
        return EstimateResult(
            estimate=mean,
            std_error=se,
            completed=mean,
            completed_std_error=se,
            n_samples=samples.size,
        )

    # ---------------------------------------------------------------------
    # Internal helpers
    # ---------------------------------------------------------------------

    def _labor_value_table(
        self, solution: RetirementSolution, y: float, decades: float = 8.0
    ) -> LogGridTable:
        return LogGridTable(
            solution.labor_value, solution.z_R, max(y, solution.z_R) * 10.0**decades
        )

    def _block_layout(self, n_paths: int) -> List[int]:
        full, rest = divmod(n_paths, self.block_size)
        return [self.block_size] * full + ([rest] if rest else [])

    def _map_blocks(
        self, fn: Callable[[int, int], _BlockSamples], n_paths: int
    ) -> List[_BlockSamples]:
        layout = self._block_layout(n_paths)
        if self.workers == 1 or len(layout) == 1:
            return [fn(i, size) for i, size in enumerate(layout)]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, range(len(layout)), layout))

    def _normals(
        self, rng: np.random.Generator, paths: int, steps: int, antithetic: bool
    ) -> np.ndarray:
        if not antithetic:
            return rng.standard_normal((paths, steps))
        half = rng.standard_normal((paths // 2, steps))
        return np.concatenate([half, -half], axis=0)

    def _estimate(
        self, y: float, functional: PathFunctional, config: SimulationConfig
    ) -> EstimateResult:
        def run(block: int, size: int) -> _BlockSamples:
            return self._simulate_block(y, functional, config, block, size)

        blocks = self._map_blocks(run, config.n_paths)
        integral = np.concatenate([b.integral for b in blocks])
        tail = np.concatenate([b.tail for b in blocks])
        unstopped = sum(b.unstopped for b in blocks) / sum(b.paths for b in blocks)

        estimate, std_error = _mean_and_error(integral)
        completed, completed_error = _mean_and_error(integral + tail)
        tail_mean = float(tail.mean())

        warning = None
        if unstopped >= _UNSTOPPED_WARN and abs(tail_mean) > _TAIL_WARN * abs(estimate):
            horizon = config.n_steps * config.dt
            warning = (
                f"Horizon T={horizon:g} truncates the estimate: {unstopped:.1%} "
                f"of paths still running, discounted tail {tail_mean:.4g} "
                f"vs estimate {estimate:.4g}"
            )
            logger.warning(warning)
        inconclusive = abs(tail_mean) > self.max_tail_share * abs(completed)

        return EstimateResult(
            estimate=estimate,
            std_error=std_error,
            tail=tail_mean,
            completed=completed,
            completed_std_error=completed_error,
            unstopped_fraction=unstopped,
            n_samples=integral.size,
            warning=warning,
            inconclusive=inconclusive,
        )

    def _simulate_block(
        self,
        y: float,
        functional: PathFunctional,
        config: SimulationConfig,
        block: int,
        size: int,
    ) -> _BlockSamples:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, block]))
        theta, r, rho = self.market.theta, self.market.r, self.market.rho
        dt = config.dt
        drift = (rho - r - 0.5 * theta**2) * dt
        vol = theta * math.sqrt(dt)
        level = functional.stop_level

        state = DualPathState(
            t=0.0,
            Y=np.full(size, float(y)),
            xi=np.ones(size),
            stopped=np.full(size, level is not None and y <= level),
        )
        integral = np.zeros(size)
        previous = self._running(functional, state.Y, state.stopped)

        done = 0
        while done < config.n_steps:
            steps = min(self.chunk_steps, config.n_steps - done)
            z = self._normals(rng, size, steps, config.antithetic)
            log_y = np.log(state.Y)[:, None] + np.cumsum(drift - vol * z, axis=1)
            Y = np.exp(log_y)
            if level is None:
                stopped = np.zeros_like(Y, dtype=bool)
            else:
                crossed = np.logical_or.accumulate(Y <= level, axis=1)
                stopped = crossed | state.stopped[:, None]
            times = (done + np.arange(1, steps + 1)) * dt
            weighted = self._running(functional, Y, stopped) * np.exp(-rho * times)
            inner = weighted[:, :-1].sum(axis=1)
            integral += dt * (0.5 * previous + inner + 0.5 * weighted[:, -1])

            previous = weighted[:, -1]
            done += steps
            state = DualPathState(
                t=done * dt,
                Y=Y[:, -1],
                xi=np.exp(-rho * done * dt) * Y[:, -1] / y,
                stopped=stopped[:, -1],
            )
            if functional.absorbing and state.stopped.all():
                break

        if functional.terminal is not None:
            horizon = config.n_steps * dt
            held = functional.terminal(state.Y, state.stopped)
            tail = math.exp(-rho * horizon) * held
        else:
            tail = np.zeros(size)

        unstopped = int(size - state.stopped.sum())
        if config.antithetic:
            half = size // 2
            integral = 0.5 * (integral[:half] + integral[half:])
            tail = 0.5 * (tail[:half] + tail[half:])
        return _BlockSamples(
            integral=integral, tail=tail, unstopped=unstopped, paths=size
        )

    def _running(
        self, functional: PathFunctional, Y: np.ndarray, stopped: np.ndarray
    ) -> np.ndarray:
        if functional.running is None:
            return np.zeros_like(Y)
        return np.asarray(functional.running(Y, stopped), dtype=float)

    def _terminal_samples(
        self, y: float, horizon: float, fn: Callable[[np.ndarray], np.ndarray]
    ) -> np.ndarray:
        """Discounted e^{-rho T} fn(Y_T) from exact one-step draws of Y_T."""
        theta, r, rho = self.market.theta, self.market.r, self.market.rho
        config = self.config

        def run(block: int, size: int) -> _BlockSamples:
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, block]))
            z = self._normals(rng, size, 1, config.antithetic)[:, 0]
            drift = (rho - r - 0.5 * theta**2) * horizon
            Y = y * np.exp(drift - theta * math.sqrt(horizon) * z)
            values = math.exp(-rho * horizon) * fn(Y)
            if config.antithetic:
                values = 0.5 * (values[: size // 2] + values[size // 2 :])
            return _BlockSamples(
                integral=values, tail=np.zeros_like(values), unstopped=size, paths=size
            )

        blocks = self._map_blocks(run, config.n_paths)
        return np.concatenate([b.integral for b in blocks])


def _mean_and_error(samples: np.ndarray) -> Tuple[float, float]:
    mean = float(samples.mean())
    if samples.size < 2:
        return mean, math.inf
    return mean, float(samples.std(ddof=1) / math.sqrt(samples.size))
