"""Equilibrium values v_{mn} and the epsilon-equilibrium behavioral strategies."""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from noisy_duels.errors import DomainError, PreconditionError, SolverError
from noisy_duels.models import DuelSpec, State
from noisy_duels.tgrid import TGrid, anti_diagonal_order

VALUE_TOL = 1e-10
MAX_HALVINGS = 200


@dataclass(frozen=True, eq=False)
class ValueTable:
    """Values (v1, v2) of every state up to (m, n), boundary row and column included."""

    m: int
    n: int
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        self.v1.setflags(write=False)
        self.v2.setflags(write=False)

    def at(self, mu: int, nu: int) -> Tuple[float, float]:
        if not (0 <= mu <= self.m and 0 <= nu <= self.n):
            raise DomainError(f"state ({mu}, {nu}) outside value table ({self.m}, {self.n})")
        return float(self.v1[mu, nu]), float(self.v2[mu, nu])

    def to_frame(self) -> pd.DataFrame:
        """One row per state (mu, nu) with columns v1, v2."""
        rows = [
            {"mu": mu, "nu": nu, "v1": self.v1[mu, nu], "v2": self.v2[mu, nu]}
            for mu in range(self.m + 1)
            for nu in range(self.n + 1)
        ]
        return pd.DataFrame(rows, columns=["mu", "nu", "v1", "v2"])

    def max_difference(self, other: "ValueTable") -> float:
        return float(max(np.max(np.abs(self.v1 - other.v1)), np.max(np.abs(self.v2 - other.v2))))


def _boundary_tables(spec: DuelSpec, m: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    v1 = np.zeros((m + 1, n + 1))
    v2 = np.zeros((m + 1, n + 1))
    v1[1:, 0] = spec.A1
    v1[0, 1:] = -spec.B1
    v2[1:, 0] = -spec.B2
    v2[0, 1:] = spec.A2
    return v1, v2


def _check_grid(spec: DuelSpec, grid: TGrid) -> None:
    if grid.m < spec.m or grid.n < spec.n:
        raise PreconditionError(
            f"grid of size ({grid.m}, {grid.n}) does not cover state ({spec.m}, {spec.n})"
        )
    if grid.profiles != (spec.P1, spec.P2):
        raise PreconditionError("grid was solved for different accuracy profiles")


def _agreed(name: str, first: float, second: float, state: Tuple[int, int]) -> float:
    if abs(first - second) > VALUE_TOL:
        raise SolverError(
            f"closed forms of {name} disagree at {state}: {first!r} vs {second!r}",
            state=state,
        )
    return first


def value_closed(spec: DuelSpec, grid: TGrid) -> ValueTable:
    """Closed-form values from the survival products along the grid.

    v1 = A1 - (A1 + B1) prod_i (1 - P1(t_{i,nu})) = (A1 + B1) prod_j (1 - P2(t_{mu,j})) - B1
    and the mirrored pair for v2. Both product forms are computed and must agree.

    Raises:
        PreconditionError: grid too small or solved for other profiles
        SolverError: the two product forms disagree (grid not solved to tolerance)
    """
    _check_grid(spec, grid)
    v1, v2 = _boundary_tables(spec, spec.m, spec.n)
    a1b1 = spec.A1 + spec.B1
    a2b2 = spec.A2 + spec.B2
    for mu, nu in anti_diagonal_order(spec.m, spec.n):
        miss1 = float(np.prod(1.0 - spec.P1.evaluate(grid.t[1 : mu + 1, nu])))
        miss2 = float(np.prod(1.0 - spec.P2.evaluate(grid.t[mu, 1 : nu + 1])))
        v1[mu, nu] = _agreed("v1", spec.A1 - a1b1 * miss1, a1b1 * miss2 - spec.B1, (mu, nu))
        v2[mu, nu] = _agreed("v2", a2b2 * miss1 - spec.B2, spec.A2 - a2b2 * miss2, (mu, nu))
    return ValueTable(m=spec.m, n=spec.n, v1=v1, v2=v2)


def recurrence_paths(spec: DuelSpec, grid: TGrid) -> Dict[str, np.ndarray]:
    """The four recurrence evaluations of the value table.

    Keys: ``v1_by_mu`` (steps Player I's resources), ``v1_by_nu``,
    ``v2_by_nu`` and ``v2_by_mu``.
    """
    _check_grid(spec, grid)
    v1_mu, v2_mu = _boundary_tables(spec, spec.m, spec.n)
    v1_nu, v2_nu = np.array(v1_mu), np.array(v2_mu)
    for mu, nu in anti_diagonal_order(spec.m, spec.n):
        t = grid.t[mu, nu]
        p = spec.P1.evaluate(t)
        q = spec.P2.evaluate(t)
        v1_mu[mu, nu] = spec.A1 * p + (1.0 - p) * v1_mu[mu - 1, nu]
        v1_nu[mu, nu] = -spec.B1 * q + (1.0 - q) * v1_nu[mu, nu - 1]
        v2_nu[mu, nu] = spec.A2 * q + (1.0 - q) * v2_nu[mu, nu - 1]
        v2_mu[mu, nu] = -spec.B2 * p + (1.0 - p) * v2_mu[mu - 1, nu]
    return {"v1_by_mu": v1_mu, "v1_by_nu": v1_nu, "v2_by_nu": v2_nu, "v2_by_mu": v2_mu}


def value_recurrence(spec: DuelSpec, grid: TGrid) -> ValueTable:
    """Value table from the one-step recurrences, checked four ways.

    Raises:
        SolverError: the two recurrences of one player disagree by more than 1e-10
    """
    paths = recurrence_paths(spec, grid)
    for a, b in (("v1_by_mu", "v1_by_nu"), ("v2_by_nu", "v2_by_mu")):
        gap = float(np.max(np.abs(paths[a] - paths[b])))
        if gap > VALUE_TOL:
            raise SolverError(f"recurrences {a} and {b} disagree by {gap!r}")
    return ValueTable(
        m=spec.m, n=spec.n, v1=np.array(paths["v1_by_mu"]), v2=np.array(paths["v2_by_nu"])
    )


def lambda_coefficient(spec: DuelSpec) -> float:
    """lambda = min(1 / (A1 + B1), 1 / (A2 + B2)) / 2."""
    return min(1.0 / (spec.A1 + spec.B1), 1.0 / (spec.A2 + spec.B2)) / 2.0


@dataclass(frozen=True, eq=False)
class EpsilonParams:
    """epsilon, lambda and the per-state support lengths delta (NaN on the boundary)."""

    epsilon: float
    lam: float
    delta: np.ndarray

    def __post_init__(self):
        self.delta.setflags(write=False)

    def at(self, mu: int, nu: int) -> float:
        return float(self.delta[mu, nu])


@dataclass(frozen=True)
class BehavioralStrategy:
    """Per-state distribution of the next action moment of one player.

    `supports[(mu, nu)] = (lo, hi)` is the uniform distribution on [lo, hi]
    (a point mass when lo == hi). States where the opponent has no resources
    left act at t = 1; states without own resources have no action.
    """

    player: int
    m: int
    n: int
    supports: Dict[State, Tuple[float, float]] = field(default_factory=dict)
    label: str = "behavioral"

    def __post_init__(self):
        if self.player not in (1, 2):
            raise PreconditionError(f"player must be 1 or 2, got {self.player!r}")

    def support(self, mu: int, nu: int) -> Optional[Tuple[float, float]]:
        """Support of the next action at state (mu, nu), None without own resources."""
        own, other = (mu, nu) if self.player == 1 else (nu, mu)
        if own == 0:
            return None
        if other == 0:
            return (1.0, 1.0)
        try:
            return self.supports[(mu, nu)]
        except KeyError:
            raise PreconditionError(
                f"{self.label} strategy of player {self.player} undefined at state ({mu}, {nu})"
            ) from None

    def conditional(self, state: State, now: float) -> Tuple[float, float]:
        """Support conditioned on no action before `now`; a point at `now` once it has passed."""
        support = self.support(*state)
        if support is None:
            raise PreconditionError(f"player {self.player} has no resources at state {state}")
        lo, hi = support
        if now >= hi:
            return (now, now)
        return (max(lo, now), hi)

    def endpoints(self) -> Iterator[float]:
        for lo, hi in self.supports.values():
            yield lo
            yield hi

    @classmethod
    def constant(cls, player: int, m: int, n: int, time: float) -> "BehavioralStrategy":
        """Point mass at `time` in every contested state."""
        supports = {(mu, nu): (time, time) for mu in range(1, m + 1) for nu in range(1, n + 1)}
        return cls(player=player, m=m, n=n, supports=supports, label=f"constant({time!r})")


def _support_length(
    spec: DuelSpec, t: float, width: float, bound: float, state: State
) -> Tuple[float, int]:
    p1, p2 = spec.P1.evaluate(t), spec.P2.evaluate(t)
    delta = 0.5 * width
    for halvings in range(MAX_HALVINGS):
        end = t + delta
        if spec.P1.evaluate(end) < p1 + bound and spec.P2.evaluate(end) < p2 + bound:
            return delta, halvings
        delta *= 0.5
    raise SolverError(f"no admissible support length at state {state}", state=state)


def epsilon_strategy(
    spec: DuelSpec, grid: TGrid, epsilon: float
) -> Tuple[BehavioralStrategy, BehavioralStrategy, EpsilonParams]:
    """Build the epsilon-equilibrium pair (x_eps, y_eps).

    In every contested state both players draw their next action moment
    uniformly from [t_{mu,nu}, t_{mu,nu} + delta_{mu,nu}]. delta is the
    largest power-of-two fraction of the corridor width whose accuracy gain
    stays below lambda * epsilon for both players.

    Args:
        spec: Duel definition
        grid: Timing grid solved for the duel's profiles
        epsilon: Admissible deviation gain, > 0

    Returns:
        Tuple (x_eps, y_eps, params)

    Raises:
        PreconditionError: epsilon <= 0 or unsuitable grid
    """
    if not epsilon > 0.0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon!r}")
    _check_grid(spec, grid)
    lam = lambda_coefficient(spec)
    delta = np.full((spec.m + 1, spec.n + 1), np.nan)
    supports: Dict[State, Tuple[float, float]] = {}
    for mu, nu in anti_diagonal_order(spec.m, spec.n):
        t = grid.at(mu, nu)
        width = grid.corridor(mu, nu) - t
        d, halvings = _support_length(spec, t, width, lam * epsilon, (mu, nu))
        logger.debug("delta{} = {!r} after {} halvings", (mu, nu), d, halvings)
        delta[mu, nu] = d
        supports[(mu, nu)] = (t, t + d)

    params = EpsilonParams(epsilon=epsilon, lam=lam, delta=delta)
    x_eps = BehavioralStrategy(player=1, m=spec.m, n=spec.n, supports=supports, label="x_eps")
    y_eps = BehavioralStrategy(player=2, m=spec.m, n=spec.n, supports=supports, label="y_eps")
    return x_eps, y_eps, params


def companion_zero_sum(spec: DuelSpec, player: int) -> DuelSpec:
    """Antagonistic duel in which `player` keeps its own payoff and the opponent
    receives the negation of it."""
    if player == 1:
        return spec.with_payoffs(A=(spec.A1, spec.B1), B=(spec.B1, spec.A1))
    if player == 2:
        return spec.with_payoffs(A=(spec.B2, spec.A2), B=(spec.A2, spec.B2))
    raise PreconditionError(f"player must be 1 or 2, got {player!r}")


def maxmin_value(spec: DuelSpec, grid: TGrid) -> ValueTable:
    """Guaranteed values w1, w2: the values of each player's companion zero-sum duel."""
    w1 = value_closed(companion_zero_sum(spec, 1), grid).v1
    w2 = value_closed(companion_zero_sum(spec, 2), grid).v2
    return ValueTable(m=spec.m, n=spec.n, v1=np.array(w1), v2=np.array(w2))
