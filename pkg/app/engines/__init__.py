"""
Engines layer: numerical algorithms and multi-step computations.

Engines are used by Services for the solver pipeline
(market -> felicity -> resolvent -> retirement -> dual -> policy) and for the
two independent cross-checks (CRRA closed forms, Monte Carlo).
See docs/EnginesArchitecture.md for details.
"""

from app.engines.dual_engine import DualValueFunction, PostRetirementDual, Side
from app.engines.montecarlo_engine import MonteCarloEngine
from app.engines.policy_engine import PolicyEngine, build_policy
from app.engines.resolvent_engine import ResolventKernel
from app.engines.retirement_engine import RetirementEngine, RetirementSolution

__all__ = [
    "DualValueFunction",
    "MonteCarloEngine",
    "PolicyEngine",
    "PostRetirementDual",
    "ResolventKernel",
    "RetirementEngine",
    "RetirementSolution",
    "Side",
    "build_policy",
]
