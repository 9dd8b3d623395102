"""Numerical verification of the epsilon-equilibrium and epsilon-maxmin properties.

Deviations are searched with a backward-induction program over the states
(mu, nu) and a discretized entry moment s. In each state one player (the
planner) picks an action moment a >= s against the other player's
conditional next-action distribution; the program optimizes the expected
payoff of a target player. The best response is planner = target with
maximization, the guaranteed (maxmin) floor is the opponent minimizing.
"""

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, computed_field

from noisy_duels.equilibrium import (
    BehavioralStrategy,
    epsilon_strategy,
    maxmin_value,
    value_closed,
)
from noisy_duels.errors import BudgetExceededError, PreconditionError
from noisy_duels.models import DuelSpec, State
from noisy_duels.sampling import (
    DEFAULT_NODES,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    Method,
    PurePlan,
    Side,
    adversarial_strategy,
    expected_payoff,
)
from noisy_duels.tgrid import DEFAULT_TOL, anti_diagonal_order, solve_grid

DEFAULT_GRID_POINTS = 2000
SUPPORT_POINTS = 64
STDERR_MULTIPLIER = 3.0


class Budgets(BaseModel):
    """Computation budget of one verification run."""

    samples: int = Field(DEFAULT_SAMPLES, ge=2)
    grid_points: int = Field(DEFAULT_GRID_POINTS, ge=2)
    seed: int = DEFAULT_SEED
    nodes: int = Field(DEFAULT_NODES, ge=1)
    method: Method = "monte-carlo"
    max_resources: int = Field(3, ge=1)
    tol: float = Field(DEFAULT_TOL, gt=0.0)


@dataclass(frozen=True, eq=False)
class BestResponse:
    """Optimal value of the planner's program and the plan achieving it."""

    value: float
    plan: Optional[PurePlan]
    grid_points: int
    dp_bound: float


def _time_grid(opponent: Side, grid_points: int) -> np.ndarray:
    parts = [np.linspace(0.0, 1.0, grid_points)]
    if isinstance(opponent, BehavioralStrategy):
        for lo, hi in opponent.supports.values():
            parts.append(np.linspace(lo, hi, SUPPORT_POINTS + 2))
    else:
        parts.append(np.fromiter(opponent.endpoints(), dtype=float))
    times = np.concatenate(parts)
    return np.unique(np.clip(times, 0.0, 1.0))


def dp_discretization_bound(
    spec: DuelSpec, times: np.ndarray, target: int, resources: Optional[int] = None
) -> float:
    """Slack for the time discretization: (A_j + B_j) * max accuracy step * (m + n)."""
    times = np.asarray(times, dtype=float)
    steps = max(
        float(np.max(np.diff(spec.P1.evaluate(times)))),
        float(np.max(np.diff(spec.P2.evaluate(times)))),
    )
    scale = spec.A1 + spec.B1 if target == 1 else spec.A2 + spec.B2
    count = spec.m + spec.n if resources is None else resources
    return scale * steps * count


def _suffix_opt(values: np.ndarray, maximize: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Running optimum of values[k:] and the index attaining it, for every k."""
    signed = values if maximize else -values
    rev = signed[::-1]
    best = np.maximum.accumulate(rev)
    positions = np.arange(len(rev))
    where = np.maximum.accumulate(np.where(rev >= best, positions, 0))
    best = best[::-1] if maximize else -best[::-1]
    return best, (len(rev) - 1 - where)[::-1]


def _optimize_state(
    state: State,
    times: np.ndarray,
    opponent: Side,
    fire: np.ndarray,
    wait: np.ndarray,
    tie: np.ndarray,
    maximize: bool,
) -> Tuple[np.ndarray, np.ndarray]:
    """Value and planned moment at every entry moment of `times`.

    `fire`, `wait` and `tie` are the target payoffs when the planner acts
    first at a, when the opponent acts first at u and when both act at the
    same moment, all as functions on `times`.
    """
    size = len(times)
    value = np.empty(size)
    planned = np.empty(size)
    worst = -np.inf if maximize else np.inf
    better = np.greater if maximize else np.less

    def at_point(k: int, c: float) -> Tuple[float, float]:
        # opponent acts surely at c >= times[k]
        j = int(np.searchsorted(times, c, side="left"))
        options = [(float(np.interp(c, times, tie)), c)]
        if c < 1.0:
            options.append((float(np.interp(c, times, wait)), 1.0))
        if j > k:
            segment = fire[k:j]
            i = int(np.argmax(segment) if maximize else np.argmin(segment))
            options.append((float(segment[i]), float(times[k + i])))
        best = options[0]
        for option in options[1:]:
            if better(option[0], best[0]):
                best = option
        return best

    support = opponent.support(*state) if isinstance(opponent, BehavioralStrategy) else None
    if support is not None and support[0] < support[1]:
        lo, hi = support
        width = hi - lo
        inside = (times[:-1] >= lo) & (times[1:] <= hi)
        segments = np.where(inside, 0.5 * (wait[:-1] + wait[1:]) * np.diff(times), 0.0)
        integral = np.concatenate(([0.0], np.cumsum(segments)))
        survival = np.clip((hi - times) / width, 0.0, 1.0)

        whole = survival * fire + integral / width
        whole_best, whole_arg = _suffix_opt(whole, maximize)
        partial = np.where(times <= hi, (hi - times) * fire + integral, worst)
        partial_best, partial_arg = _suffix_opt(partial, maximize)

        for k in range(size):
            s = times[k]
            if s <= lo:
                value[k], planned[k] = whole_best[k], times[whole_arg[k]]
            elif s < hi:
                value[k] = (partial_best[k] - integral[k]) / (hi - s)
                planned[k] = times[partial_arg[k]]
            else:
                value[k], planned[k] = at_point(k, s)
        return value, planned

    for k in range(size):
        lo, _ = opponent.conditional(state, float(times[k]))
        value[k], planned[k] = at_point(k, lo)
    return value, planned


def _plan_program(
    spec: DuelSpec,
    opponent: Side,
    planner: int,
    target: int,
    maximize: bool,
    grid_points: int,
) -> BestResponse:
    if grid_points < 2:
        raise PreconditionError(f"need at least 2 time grid points, got {grid_points!r}")
    if opponent.player == planner:
        raise PreconditionError("planner and opponent must be different players")

    times = _time_grid(opponent, grid_points)
    bound = dp_discretization_bound(spec, times, target)
    gain_1 = spec.A1 if target == 1 else -spec.B2
    gain_2 = -spec.B1 if target == 1 else spec.A2

    def terminal(mu: int, nu: int) -> float:
        if mu > 0 and nu == 0:
            return gain_1
        if mu == 0 and nu > 0:
            return gain_2
        return 0.0

    if spec.m == 0 or spec.n == 0:
        return BestResponse(
            value=terminal(spec.m, spec.n), plan=None, grid_points=grid_points, dp_bound=0.0
        )

    values: Dict[State, np.ndarray] = {}

    def lookup(mu: int, nu: int) -> np.ndarray:
        if mu == 0 or nu == 0:
            return np.full(len(times), terminal(mu, nu))
        return values[(mu, nu)]

    p1 = spec.P1.evaluate(times)
    p2 = spec.P2.evaluate(times)
    if planner == 1:
        pi, rho, gain_p, gain_o = p1, p2, gain_1, gain_2
    else:
        pi, rho, gain_p, gain_o = p2, p1, gain_2, gain_1

    contingent: Dict[State, np.ndarray] = {}
    for mu, nu in anti_diagonal_order(spec.m, spec.n):
        after_1, after_2 = lookup(mu - 1, nu), lookup(mu, nu - 1)
        after_p, after_o = (after_1, after_2) if planner == 1 else (after_2, after_1)
        fire = gain_p * pi + (1.0 - pi) * after_p
        wait = gain_o * rho + (1.0 - rho) * after_o
        tie = (
            gain_p * pi * (1.0 - rho)
            + gain_o * rho * (1.0 - pi)
            + (1.0 - pi) * (1.0 - rho) * lookup(mu - 1, nu - 1)
        )
        values[(mu, nu)], contingent[(mu, nu)] = _optimize_state(
            (mu, nu), times, opponent, fire, wait, tie, maximize
        )
        logger.debug("Planner {} solved state {} on {} moments", planner, (mu, nu), len(times))

    plan = PurePlan(
        player=planner,
        entry_grid=times,
        contingent=contingent,
        label="best-response" if maximize else "worst-case",
    )
    top = float(values[(spec.m, spec.n)][0])
    return BestResponse(value=top, plan=plan, grid_points=grid_points, dp_bound=bound)


def best_response(
    spec: DuelSpec,
    opponent: Side,
    for_player: int,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> BestResponse:
    """Best pure contingent plan of `for_player` against a fixed opponent.

    Args:
        spec: Duel definition
        opponent: Behavioral strategy (or plan) of the other player
        for_player: 1 or 2
        grid_points: Uniform time grid size G (support points are added)

    Returns:
        BestResponse with the program value at entry moment 0 and the witness plan
    """
    return _plan_program(spec, opponent, for_player, for_player, True, grid_points)


def worst_case(
    spec: DuelSpec,
    strategy: Side,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> BestResponse:
    """Lowest payoff the opponent can force on the owner of `strategy`."""
    other = 2 if strategy.player == 1 else 1
    return _plan_program(spec, strategy, other, strategy.player, False, grid_points)


class CheckResult(BaseModel):
    """One inequality: observed <= bound + slack."""

    name: str
    observed: float
    bound: float
    slack: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return self.observed <= self.bound + self.slack


class VerificationReport(BaseModel):
    """Outcome of an epsilon-equilibrium or epsilon-maxmin verification."""

    kind: Literal["epsilon-equilibrium", "maxmin"]
    state: Tuple[int, int]
    epsilon: float
    value: Tuple[float, float]
    payoff: Optional[Tuple[float, float]] = None
    stderr: Optional[Tuple[float, float]] = None
    best_response: Optional[Tuple[float, float]] = None
    maxmin_floor: Optional[Tuple[float, float]] = None
    dp_bound: Tuple[float, float]
    checks: List[CheckResult] = Field(default_factory=list)
    method: str
    samples: int
    grid_points: int
    seed: int
    adversarial_control: bool = False

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def _check_budget(spec: DuelSpec, budgets: Budgets) -> None:
    if spec.m > budgets.max_resources or spec.n > budgets.max_resources:
        raise BudgetExceededError(
            f"state ({spec.m}, {spec.n}) exceeds the verification budget "
            f"of {budgets.max_resources} resources per player"
        )


def _log_report(report: VerificationReport) -> None:
    for check in report.checks:
        if not check.passed:
            logger.warning(
                "{} check {} failed: {:.6g} > {:.6g} + {:.3g}",
                report.kind,
                check.name,
                check.observed,
                check.bound,
                check.slack,
            )
    logger.info(
        "{} verification at state {}: {}",
        report.kind,
        report.state,
        "passed" if report.passed else "FAILED",
    )


def verify_epsilon_equilibrium(
    spec: DuelSpec,
    epsilon: float,
    budgets: Optional[Budgets] = None,
    adversarial_control: bool = False,
) -> VerificationReport:
    """Check that (x_eps, y_eps) is an epsilon-equilibrium of the duel.

    Four checks are made: no unilateral deviation of either player gains
    more than epsilon (best-response program), and each player's expected
    payoff is within epsilon of the equilibrium value. The slack of each
    check is 3 standard errors plus the discretization bound.

    With `adversarial_control` Player II's strategy is replaced by the plan
    acting at t_11 / 2, which must make the report fail.

    Raises:
        BudgetExceededError: m or n larger than `budgets.max_resources`
        PreconditionError: epsilon <= 0
    """
    budgets = budgets or Budgets()
    _check_budget(spec, budgets)
    grid = solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1), budgets.tol)
    values = value_closed(spec, grid)
    v = values.at(spec.m, spec.n)
    x_eps, y_eps, _ = epsilon_strategy(spec, grid, epsilon)
    side_2: Side = adversarial_strategy(grid, 2) if adversarial_control else y_eps

    estimate = expected_payoff(
        spec,
        x_eps,
        side_2,
        method=budgets.method,
        samples=budgets.samples,
        seed=budgets.seed,
        nodes=budgets.nodes,
    )
    k = (estimate.k1, estimate.k2)
    se = (estimate.stderr1, estimate.stderr2)
    br_1 = best_response(spec, side_2, 1, budgets.grid_points)
    br_2 = best_response(spec, x_eps, 2, budgets.grid_points)

    checks = [
        CheckResult(
            name="deviation_gain_1",
            observed=br_1.value - k[0],
            bound=epsilon,
            slack=STDERR_MULTIPLIER * se[0] + br_1.dp_bound,
        ),
        CheckResult(
            name="deviation_gain_2",
            observed=br_2.value - k[1],
            bound=epsilon,
            slack=STDERR_MULTIPLIER * se[1] + br_2.dp_bound,
        ),
        CheckResult(
            name="value_match_1",
            observed=abs(k[0] - v[0]),
            bound=epsilon,
            slack=STDERR_MULTIPLIER * se[0],
        ),
        CheckResult(
            name="value_match_2",
            observed=abs(k[1] - v[1]),
            bound=epsilon,
            slack=STDERR_MULTIPLIER * se[1],
        ),
    ]
    report = VerificationReport(
        kind="epsilon-equilibrium",
        state=(spec.m, spec.n),
        epsilon=epsilon,
        value=v,
        payoff=k,
        stderr=se,
        best_response=(br_1.value, br_2.value),
        dp_bound=(br_1.dp_bound, br_2.dp_bound),
        checks=checks,
        method=budgets.method,
        samples=budgets.samples,
        grid_points=budgets.grid_points,
        seed=budgets.seed,
        adversarial_control=adversarial_control,
    )
    _log_report(report)
    return report


def verify_maxmin(
    spec: DuelSpec, epsilon: float, budgets: Optional[Budgets] = None
) -> VerificationReport:
    """Check that x_eps and y_eps guarantee their owners w_j - epsilon.

    The floor of each player is the value of the opponent's minimizing
    program against that player's epsilon-strategy; w is the value of the
    companion zero-sum duel.
    """
    budgets = budgets or Budgets()
    _check_budget(spec, budgets)
    grid = solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1), budgets.tol)
    w = maxmin_value(spec, grid).at(spec.m, spec.n)
    x_eps, y_eps, _ = epsilon_strategy(spec, grid, epsilon)

    floor_1 = worst_case(spec, x_eps, budgets.grid_points)
    floor_2 = worst_case(spec, y_eps, budgets.grid_points)
    checks = [
        CheckResult(
            name="maxmin_floor_1",
            observed=w[0] - floor_1.value,
            bound=epsilon,
            slack=floor_1.dp_bound,
        ),
        CheckResult(
            name="maxmin_floor_2",
            observed=w[1] - floor_2.value,
            bound=epsilon,
            slack=floor_2.dp_bound,
        ),
    ]
    report = VerificationReport(
        kind="maxmin",
        state=(spec.m, spec.n),
        epsilon=epsilon,
        value=w,
        maxmin_floor=(floor_1.value, floor_2.value),
        dp_bound=(floor_1.dp_bound, floor_2.dp_bound),
        checks=checks,
        method="dynamic-programming",
        samples=0,
        grid_points=budgets.grid_points,
        seed=budgets.seed,
    )
    _log_report(report)
    return report
