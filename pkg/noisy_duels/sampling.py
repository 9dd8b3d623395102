"""Realizing behavioral strategies as plays and estimating their expected payoffs.

A side is either a `BehavioralStrategy` (random next action moment per state)
or a `PurePlan` (a planned moment per state, optionally contingent on the
moment the state was entered). Both expose ``conditional(state, now)``:
the support of the next action given that nothing happened before `now`.

Only the action moments along the path on which every action misses are
sampled; the expectation over hits and misses is done exactly by the payoff
recursion, which keeps the Monte Carlo variance small.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel

from noisy_duels.equilibrium import BehavioralStrategy
from noisy_duels.errors import PreconditionError
from noisy_duels.models import DuelSpec, Play, State
from noisy_duels.payoff import evaluate_batch
from noisy_duels.tgrid import TGrid

DEFAULT_SEED = 20240601
DEFAULT_SAMPLES = 100_000
DEFAULT_NODES = 8
CHUNK_SIZE = 4096
MAX_QUADRATURE_RESOURCES = 4
BOUND_TOL = 1e-12

Method = Literal["monte-carlo", "quadrature"]


@dataclass(frozen=True, eq=False)
class PurePlan:
    """Deterministic plan of one player.

    The planned moment for a state is looked up in `contingent` (one entry
    per point of `entry_grid`, indexed by the last grid point not after the
    entry moment), then in `times`, then `default`. A plan never acts before
    the current moment, and acts at t = 1 once the opponent is out of
    resources.
    """

    player: int
    times: Dict[State, float] = field(default_factory=dict)
    default: Optional[float] = None
    entry_grid: Optional[np.ndarray] = None
    contingent: Dict[State, np.ndarray] = field(default_factory=dict)
    label: str = "plan"

    def __post_init__(self):
        if self.player not in (1, 2):
            raise PreconditionError(f"player must be 1 or 2, got {self.player!r}")
        if self.contingent and self.entry_grid is None:
            raise PreconditionError("a contingent plan needs an entry grid")

    def _own_other(self, state: State) -> Tuple[int, int]:
        mu, nu = state
        return (mu, nu) if self.player == 1 else (nu, mu)

    def planned(self, state: State, now: np.ndarray) -> np.ndarray:
        """Planned moments at `state` for an array of entry moments."""
        own, other = self._own_other(state)
        now = np.asarray(now, dtype=float)
        if own == 0:
            raise PreconditionError(f"player {self.player} has no resources at state {state}")
        if other == 0:
            return np.ones_like(now)
        if state in self.contingent:
            assert self.entry_grid is not None
            idx = np.searchsorted(self.entry_grid, now, side="right") - 1
            idx = np.clip(idx, 0, len(self.entry_grid) - 1)
            return np.asarray(self.contingent[state], dtype=float)[idx]
        if state in self.times:
            return np.full_like(now, self.times[state])
        if self.default is not None:
            return np.full_like(now, self.default)
        raise PreconditionError(f"{self.label} of player {self.player} undefined at state {state}")

    def conditional(self, state: State, now: float) -> Tuple[float, float]:
        c = max(float(self.planned(state, np.asarray(now))), now)
        return (c, c)

    def endpoints(self) -> Iterator[float]:
        yield from self.times.values()
        if self.default is not None:
            yield self.default


Side = Union[BehavioralStrategy, PurePlan]


def _check_sides(side_1: Side, side_2: Side) -> None:
    if side_1.player != 1 or side_2.player != 2:
        raise PreconditionError(
            f"sides must belong to players 1 and 2, got {side_1.player} and {side_2.player}"
        )


def _draw(side: Side, state: State, now: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if isinstance(side, PurePlan):
        return np.maximum(side.planned(state, now), now)
    support = side.support(*state)
    if support is None:
        raise PreconditionError(f"player {side.player} has no resources at state {state}")
    lo, hi = support
    if lo == hi:
        return np.maximum(lo, now)
    start = np.maximum(lo, now)
    u = rng.uniform(size=now.shape)
    drawn = start + u * (hi - start)
    return np.where(now >= hi, now, drawn)


def _simulate(
    spec: DuelSpec, side_1: Side, side_2: Side, size: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Sample `size` plays; returns arrays taus (size, m) and etas (size, n)."""
    taus = np.ones((size, spec.m))
    etas = np.ones((size, spec.n))
    mu = np.full(size, spec.m)
    nu = np.full(size, spec.n)
    now = np.zeros(size)
    rows = np.arange(size)

    for _ in range(spec.m + spec.n):
        active = (mu > 0) | (nu > 0)
        if not active.any():
            break
        s = np.full(size, np.inf)
        u = np.full(size, np.inf)
        for a, b in sorted(set(zip(mu[active].tolist(), nu[active].tolist()))):
            idx = np.flatnonzero((mu == a) & (nu == b))
            if a > 0:
                s[idx] = _draw(side_1, (a, b), now[idx], rng)
            if b > 0:
                u[idx] = _draw(side_2, (a, b), now[idx], rng)
        fire1 = active & (s <= u)
        fire2 = active & (u <= s)
        taus[rows[fire1], mu[fire1] - 1] = s[fire1]
        etas[rows[fire2], nu[fire2] - 1] = u[fire2]
        now = np.where(active, np.minimum(s, u), now)
        mu = mu - fire1
        nu = nu - fire2
    return taus, etas


def sample_play(spec: DuelSpec, side_1: Side, side_2: Side, seed: int = DEFAULT_SEED) -> Play:
    """Realize one play of the two sides along the all-miss path.

    At each state both sides produce a next action moment; the earlier one
    acts (both on a tie), the actor's resource drops by one and the clock
    advances. The play is the first row of `simulate_plays` with the same seed.
    """
    taus, etas = simulate_plays(spec, side_1, side_2, 1, seed)
    return Play(tau=tuple(taus[0]), eta=tuple(etas[0]))


def simulate_plays(
    spec: DuelSpec, side_1: Side, side_2: Side, count: int, seed: int = DEFAULT_SEED
) -> Tuple[np.ndarray, np.ndarray]:
    """`count` plays of the two sides, drawn from the same chunked streams as
    the Monte Carlo estimator.

    Returns:
        Arrays taus (count, m) and etas (count, n)
    """
    _check_sides(side_1, side_2)
    if count < 1:
        raise PreconditionError(f"need at least 1 play, got {count!r}")
    taus: List[np.ndarray] = []
    etas: List[np.ndarray] = []
    for chunk, start in enumerate(range(0, count, CHUNK_SIZE)):
        size = min(CHUNK_SIZE, count - start)
        t, e = _simulate(spec, side_1, side_2, size, chunk_rng(seed, chunk))
        taus.append(t)
        etas.append(e)
    return np.vstack(taus), np.vstack(etas)


class PayoffEstimate(BaseModel):
    """Estimated expected payoffs (K1, K2) of a pair of sides."""

    k1: float
    k2: float
    stderr1: float
    stderr2: float
    method: str
    samples: Optional[int] = None
    nodes: Optional[int] = None
    seed: Optional[int] = None
    bounds_ok: bool = True


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Random stream of Monte Carlo chunk `chunk`, independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _monte_carlo(
    spec: DuelSpec, side_1: Side, side_2: Side, samples: int, seed: int
) -> PayoffEstimate:
    parts1: List[np.ndarray] = []
    parts2: List[np.ndarray] = []
    for chunk, start in enumerate(range(0, samples, CHUNK_SIZE)):
        size = min(CHUNK_SIZE, samples - start)
        taus, etas = _simulate(spec, side_1, side_2, size, chunk_rng(seed, chunk))
        k1, k2 = evaluate_batch(spec, taus, etas)
        parts1.append(k1)
        parts2.append(k2)
    k1 = np.concatenate(parts1)
    k2 = np.concatenate(parts2)
    bounds_ok = bool(
        np.all((k1 >= -spec.B1 - BOUND_TOL) & (k1 <= spec.A1 + BOUND_TOL))
        and np.all((k2 >= -spec.B2 - BOUND_TOL) & (k2 <= spec.A2 + BOUND_TOL))
    )
    if not bounds_ok:
        logger.warning("Sampled payoffs left the interval [-B_j, A_j]")
    root_n = np.sqrt(samples)
    return PayoffEstimate(
        k1=float(np.mean(k1)),
        k2=float(np.mean(k2)),
        stderr1=float(np.std(k1, ddof=1) / root_n),
        stderr2=float(np.std(k2, ddof=1) / root_n),
        method="monte-carlo",
        samples=samples,
        seed=seed,
        bounds_ok=bounds_ok,
    )


class _Quadrature:
    """Nested Gauss-Legendre integration over the per-state action densities."""

    def __init__(self, spec: DuelSpec, side_1: Side, side_2: Side, nodes: int):
        self.spec = spec
        self.sides = (side_1, side_2)
        self.x, self.w = np.polynomial.legendre.leggauss(nodes)
        self.knots = np.union1d(spec.P1.knots(), spec.P2.knots())
        self.cache: Dict[tuple, np.ndarray] = {}

    def value(self, state: State, now: float) -> np.ndarray:
        spec = self.spec
        mu, nu = state
        if mu == 0 and nu == 0:
            return np.zeros(2)
        if nu == 0:
            return np.array([spec.A1, -spec.B2])
        if mu == 0:
            return np.array([-spec.B1, spec.A2])
        d1 = self.sides[0].conditional(state, now)
        d2 = self.sides[1].conditional(state, now)
        key = (state, d1, d2)
        if key not in self.cache:
            self.cache[key] = self._contest(state, d1, d2)
        return self.cache[key]

    def _fire1(self, state: State, s: float) -> np.ndarray:
        p = self.spec.P1.evaluate(s)
        child = self.value((state[0] - 1, state[1]), s)
        return np.array([self.spec.A1 * p, -self.spec.B2 * p]) + (1.0 - p) * child

    def _fire2(self, state: State, u: float) -> np.ndarray:
        q = self.spec.P2.evaluate(u)
        child = self.value((state[0], state[1] - 1), u)
        return np.array([-self.spec.B1 * q, self.spec.A2 * q]) + (1.0 - q) * child

    def _tie(self, state: State, s: float) -> np.ndarray:
        spec = self.spec
        p = spec.P1.evaluate(s)
        q = spec.P2.evaluate(s)
        child = self.value((state[0] - 1, state[1] - 1), s)
        return (
            np.array(
                [
                    spec.A1 * p * (1.0 - q) - spec.B1 * (1.0 - p) * q,
                    spec.A2 * q * (1.0 - p) - spec.B2 * p * (1.0 - q),
                ]
            )
            + (1.0 - p) * (1.0 - q) * child
        )

    def _integrate(
        self, func: Callable[[float], np.ndarray], lo: float, hi: float, breaks: List[float]
    ) -> np.ndarray:
        total = np.zeros(2)
        if hi <= lo:
            return total
        inner = [b for b in list(breaks) + list(self.knots) if lo < b < hi]
        points = np.unique(np.concatenate(([lo, hi], inner)))
        for a, b in zip(points[:-1], points[1:]):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            for xi, wi in zip(self.x, self.w):
                total += wi * half * func(float(mid + half * xi))
        return total

    def _contest(self, state: State, d1: Tuple[float, float], d2: Tuple[float, float]):
        (a1, b1), (a2, b2) = d1, d2
        atom1, atom2 = a1 == b1, a2 == b2
        if atom1 and atom2:
            if a1 < a2:
                return self._fire1(state, a1)
            if a2 < a1:
                return self._fire2(state, a2)
            return self._tie(state, a1)
        if atom1:
            survive2 = min(max((b2 - a1) / (b2 - a2), 0.0), 1.0)
            early = self._integrate(lambda u: self._fire2(state, u), a2, min(b2, a1), [])
            return survive2 * self._fire1(state, a1) + early / (b2 - a2)
        if atom2:
            survive1 = min(max((b1 - a2) / (b1 - a1), 0.0), 1.0)
            early = self._integrate(lambda s: self._fire1(state, s), a1, min(b1, a2), [])
            return survive1 * self._fire2(state, a2) + early / (b1 - a1)

        def first(s: float) -> np.ndarray:
            survive2 = min(max((b2 - s) / (b2 - a2), 0.0), 1.0)
            return survive2 * self._fire1(state, s) / (b1 - a1)

        def second(u: float) -> np.ndarray:
            survive1 = min(max((b1 - u) / (b1 - a1), 0.0), 1.0)
            return survive1 * self._fire2(state, u) / (b2 - a2)

        return self._integrate(first, a1, b1, [a2, b2]) + self._integrate(
            second, a2, b2, [a1, b1]
        )


def expected_payoff(
    spec: DuelSpec,
    side_1: Side,
    side_2: Side,
    method: Method = "monte-carlo",
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    nodes: int = DEFAULT_NODES,
) -> PayoffEstimate:
    """Expected payoffs of both players when side_1 meets side_2.

    Args:
        spec: Duel definition
        side_1: Strategy or plan of Player I
        side_2: Strategy or plan of Player II
        method: "monte-carlo" (chunked, seeded sampling) or "quadrature"
        samples: Monte Carlo sample count (>= 2)
        seed: Master seed of the Monte Carlo streams
        nodes: Gauss-Legendre nodes per integration piece (quadrature)

    Returns:
        PayoffEstimate; quadrature reports a zero standard error

    Raises:
        PreconditionError: invalid method parameters, or m + n > 4 for quadrature
    """
    _check_sides(side_1, side_2)
    if method == "monte-carlo":
        if samples < 2:
            raise PreconditionError(f"need at least 2 samples, got {samples!r}")
        estimate = _monte_carlo(spec, side_1, side_2, samples, seed)
    elif method == "quadrature":
        if nodes < 1:
            raise PreconditionError(f"need at least 1 quadrature node, got {nodes!r}")
        if spec.m + spec.n > MAX_QUADRATURE_RESOURCES:
            raise PreconditionError(
                f"quadrature supports m + n <= {MAX_QUADRATURE_RESOURCES}, "
                f"got {spec.m + spec.n}"
            )
        k1, k2 = _Quadrature(spec, side_1, side_2, nodes).value((spec.m, spec.n), 0.0)
        estimate = PayoffEstimate(
            k1=float(k1), k2=float(k2), stderr1=0.0, stderr2=0.0, method=method, nodes=nodes
        )
    else:
        raise PreconditionError(f"unknown method {method!r}")
    logger.debug(
        "Expected payoff ({}): K1={:.6f} +- {:.2e}, K2={:.6f} +- {:.2e}",
        method,
        estimate.k1,
        estimate.stderr1,
        estimate.k2,
        estimate.stderr2,
    )
    return estimate


def adversarial_strategy(grid: TGrid, player: int) -> PurePlan:
    """Plan acting at t_11 / 2 in every contested state."""
    return PurePlan(player=player, default=0.5 * grid.at(1, 1), label="adversarial")
