"""
noisy-duels: nonzero-sum noisy duels with discrete firing moments.

This package solves the equilibrium timing grid, evaluates expected payoffs
of plays, builds and verifies epsilon-equilibrium strategies and checks the
Pareto-optimality properties of plays.
"""

from noisy_duels.accuracy import AccuracyProfile, parse_profile, validate
from noisy_duels.equilibrium import epsilon_strategy, maxmin_value, value_closed
from noisy_duels.errors import (
    BudgetExceededError,
    ConfigError,
    DomainError,
    DuelError,
    PreconditionError,
    SolverError,
)
from noisy_duels.models import DuelSpec, OutcomeDistribution, PayoffVector, Play
from noisy_duels.pareto import check_pareto_theorems
from noisy_duels.payoff import evaluate, outcome_distribution
from noisy_duels.tgrid import TGrid, solve_grid
from noisy_duels.verify import verify_epsilon_equilibrium, verify_maxmin

__version__ = "0.1.0"


def duel(
    m: int = 1,
    n: int = 1,
    A: tuple = (1.0, 1.0),
    B: tuple = (1.0, 1.0),
    P1: str = "linear",
    P2: str = "linear",
) -> DuelSpec:
    """
    Create a duel from compact arguments.

    Args:
        m: Resources of Player I
        n: Resources of Player II
        A: Profits (A1, A2) of a success
        B: Losses (B1, B2) when the opponent succeeds
        P1: Accuracy of Player I in compact form (e.g. "linear", "power:2")
        P2: Accuracy of Player II

    Returns:
        Validated DuelSpec
    """
    return DuelSpec(m=m, n=n, A=A, B=B, P1=P1, P2=P2)


__all__ = [
    "AccuracyProfile",
    "BudgetExceededError",
    "ConfigError",
    "DomainError",
    "DuelError",
    "DuelSpec",
    "OutcomeDistribution",
    "PayoffVector",
    "Play",
    "PreconditionError",
    "SolverError",
    "TGrid",
    "check_pareto_theorems",
    "duel",
    "epsilon_strategy",
    "evaluate",
    "maxmin_value",
    "outcome_distribution",
    "parse_profile",
    "solve_grid",
    "validate",
    "value_closed",
    "verify_epsilon_equilibrium",
    "verify_maxmin",
]
