"""Equilibrium timing grid {t_mn}.

For every state (mu, nu) the grid time t solves

    prod_{i<=mu} (1 - P1(t_{i,nu})) + prod_{j<=nu} (1 - P2(t_{mu,j})) = 1

with 0 < t_{mu,nu} < min(t_{mu-1,nu}, t_{mu,nu-1}) and t_{0,nu} = t_{mu,0} = 1.
Entry (mu, nu) only depends on entries with a smaller index sum, so the grid
is filled one anti-diagonal at a time, each entry by bisection.
"""

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from noisy_duels.accuracy import AccuracyProfile, require_valid
from noisy_duels.errors import DomainError, PreconditionError, SolverError

DEFAULT_TOL = 1e-12
MAX_BISECTIONS = 200


@dataclass(frozen=True, eq=False)
class TGrid:
    """Solved timing grid.

    `t` has shape (m + 1, n + 1); row 0 and column 0 hold the boundary value 1.
    """

    m: int
    n: int
    t: np.ndarray
    tol: float
    profiles: Tuple[AccuracyProfile, AccuracyProfile]

    def __post_init__(self):
        self.t.setflags(write=False)

    def at(self, mu: int, nu: int) -> float:
        """Return t_{mu,nu}; 1 on the boundary mu = 0 or nu = 0."""
        if not (0 <= mu <= self.m and 0 <= nu <= self.n):
            raise DomainError(f"state ({mu}, {nu}) outside grid of size ({self.m}, {self.n})")
        return float(self.t[mu, nu])

    def __getitem__(self, key: Tuple[int, int]) -> float:
        return self.at(*key)

    def corridor(self, mu: int, nu: int) -> float:
        """Upper end of the admissible interval for t_{mu,nu}."""
        return min(self.at(mu - 1, nu), self.at(mu, nu - 1))

    def interior(self) -> np.ndarray:
        """The m x n matrix of interior times."""
        return np.array(self.t[1:, 1:])

    def states(self) -> Iterator[Tuple[int, int]]:
        """Interior states in anti-diagonal order."""
        yield from anti_diagonal_order(self.m, self.n)

    def to_frame(self) -> pd.DataFrame:
        """Interior times as a frame indexed by mu with one column per nu."""
        frame = pd.DataFrame(
            self.interior(),
            index=pd.Index(range(1, self.m + 1), name="mu"),
            columns=[f"nu_{nu}" for nu in range(1, self.n + 1)],
        )
        return frame


def anti_diagonal_order(m: int, n: int) -> Iterator[Tuple[int, int]]:
    """Yield (mu, nu), 1 <= mu <= m, 1 <= nu <= n, by increasing mu + nu."""
    for d in range(2, m + n + 1):
        for mu in range(max(1, d - n), min(m, d - 1) + 1):
            yield mu, d - mu


def _bisect(g, upper: float, tol: float, state: Tuple[int, int]) -> float:
    lo, hi = 0.0, upper
    g_lo = g(lo)
    g_hi = g(hi)
    if not (g_lo >= 0.0 and g_hi <= 0.0):
        raise SolverError(
            f"no sign change of the grid equation on (0, {upper!r}] at state {state}: "
            f"G(0)={g_lo!r}, G(upper)={g_hi!r}",
            state=state,
        )
    if g_lo <= tol:
        logger.debug("t{} = 0.0: root at the left edge", state)
        return lo
    mid = 0.5 * (lo + hi)
    for iteration in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        value = g(mid)
        if abs(value) <= tol:
            logger.debug("t{} = {!r} after {} bisections", state, mid, iteration + 1)
            return mid
        if value > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * 1e-2:
            break
    logger.debug("t{} = {!r}: interval cutoff reached with |G| > tol", state, mid)
    return mid


def solve_grid(
    P1: AccuracyProfile, P2: AccuracyProfile, m: int, n: int, tol: float = DEFAULT_TOL
) -> TGrid:
    """Solve the timing grid for resources up to (m, n).

    Args:
        P1: Accuracy profile of Player I
        P2: Accuracy profile of Player II
        m: Resources of Player I (>= 1)
        n: Resources of Player II (>= 1)
        tol: Target absolute residual of the grid equation

    Returns:
        Solved, read-only TGrid

    Raises:
        PreconditionError: invalid sizes, tolerance or profiles
        SolverError: the grid equation has no sign change on a bracket
    """
    if m < 1 or n < 1:
        raise PreconditionError(f"grid needs m, n >= 1, got ({m}, {n})")
    if not tol > 0.0:
        raise PreconditionError(f"tolerance must be positive, got {tol!r}")
    require_valid(P1, P2)

    t = np.ones((m + 1, n + 1))
    for mu, nu in anti_diagonal_order(m, n):
        a = float(np.prod(1.0 - P1.evaluate(t[1:mu, nu])))
        b = float(np.prod(1.0 - P2.evaluate(t[mu, 1:nu])))

        def g(x: float, a: float = a, b: float = b) -> float:
            return a * (1.0 - P1.evaluate(x)) + b * (1.0 - P2.evaluate(x)) - 1.0

        upper = min(t[mu - 1, nu], t[mu, nu - 1])
        t[mu, nu] = _bisect(g, upper, tol, (mu, nu))

    logger.debug("Solved timing grid of size ({}, {}) with tol={}", m, n, tol)
    return TGrid(m=m, n=n, t=t, tol=tol, profiles=(P1, P2))


def _equation_lhs(grid: TGrid, P1: AccuracyProfile, P2: AccuracyProfile) -> np.ndarray:
    lhs = np.empty((grid.m, grid.n))
    for mu in range(1, grid.m + 1):
        for nu in range(1, grid.n + 1):
            lhs[mu - 1, nu - 1] = np.prod(1.0 - P1.evaluate(grid.t[1 : mu + 1, nu])) + np.prod(
                1.0 - P2.evaluate(grid.t[mu, 1 : nu + 1])
            )
    return lhs


def residual(grid: TGrid, P1: AccuracyProfile, P2: AccuracyProfile) -> float:
    """Maximum absolute residual of the grid equation over all interior states.

    Raises:
        PreconditionError: the grid was solved for other profiles
    """
    if (P1, P2) != grid.profiles:
        raise PreconditionError("grid was solved for different accuracy profiles")
    if np.any((grid.t[1:, 1:] < 0.0) | (grid.t[1:, 1:] > 1.0)):
        return float("inf")
    return float(np.max(np.abs(_equation_lhs(grid, P1, P2) - 1.0)))


def corridor_holds(grid: TGrid) -> bool:
    """True when 0 < t_{mu,nu} < min(t_{mu-1,nu}, t_{mu,nu-1}) for every interior state."""
    inner = grid.t[1:, 1:]
    return bool(
        np.all(inner > 0.0)
        and np.all(inner < grid.t[:-1, 1:])
        and np.all(inner < grid.t[1:, :-1])
    )


def perturbed(grid: TGrid, mu: int, nu: int, delta: float) -> TGrid:
    """Copy of `grid` with t_{mu,nu} shifted by `delta` (for sensitivity checks)."""
    if not (1 <= mu <= grid.m and 1 <= nu <= grid.n):
        raise DomainError(f"state ({mu}, {nu}) is not an interior grid entry")
    t = np.array(grid.t)
    t[mu, nu] += delta
    return TGrid(m=grid.m, n=grid.n, t=t, tol=grid.tol, profiles=grid.profiles)
