"""Pareto analysis of plays: T-plays, the play set P, dominance and quasi-antagonism.

Pareto optimality is certified relative to a discretization of P: a suite
passes when no dominating play is found among the enumerated plays.
"""

import itertools
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, computed_field

from noisy_duels.errors import BudgetExceededError, PreconditionError
from noisy_duels.models import DuelSpec, Play
from noisy_duels.payoff import evaluate, evaluate_batch
from noisy_duels.tgrid import TGrid

PARETO_TOL = 1e-12
AFFINE_TOL = 1e-10
LEMMA_TOL = 1e-10
TIME_MATCH_TOL = 1e-12
DEFAULT_RESOLUTION = 50
DEFAULT_MAX_RESOURCES = 4
SUITES = ("t4", "t4a", "l6", "l5")


class Relation(str, Enum):
    DOMINATES = "dominates"
    DOMINATED = "dominated"
    EQUIVALENT = "equivalent"
    INCOMPARABLE = "incomparable"


def compare(
    k_a: Sequence[float], k_b: Sequence[float], tol: float = PARETO_TOL
) -> Relation:
    """Pareto relation of payoff vector `k_a` to `k_b`.

    Component differences within `tol` count as equal, so near-ties are
    reported as equivalent rather than as dominance.
    """
    diffs = [a - b for a, b in zip(k_a, k_b)]
    snapped = [0.0 if abs(d) <= tol else d for d in diffs]
    if all(d == 0.0 for d in snapped):
        return Relation.EQUIVALENT
    if all(d >= 0.0 for d in snapped):
        return Relation.DOMINATES
    if all(d <= 0.0 for d in snapped):
        return Relation.DOMINATED
    return Relation.INCOMPARABLE


def dominates(spec: DuelSpec, p1: Play, p2: Play, tol: float = 0.0) -> bool:
    """True iff K(p1) >= K(p2) componentwise with at least one strict inequality."""
    k1 = evaluate(spec, p1).as_tuple()
    k2 = evaluate(spec, p2).as_tuple()
    return compare(k1, k2, tol) is Relation.DOMINATES


def t_play_variants(m: int, n: int) -> List[Tuple[int, ...]]:
    """Every carrier sequence of a T-play.

    Entry k names the player acting at the grid time of the k-th contested
    state on the resource path from (m, n); the path ends when one player is
    out of resources.
    """
    if m < 1 or n < 1:
        return [()]
    variants: List[Tuple[int, ...]] = []

    def walk(mu: int, nu: int, prefix: Tuple[int, ...]) -> None:
        if mu == 0 or nu == 0:
            variants.append(prefix)
            return
        walk(mu - 1, nu, prefix + (1,))
        walk(mu, nu - 1, prefix + (2,))

    walk(m, n, ())
    return variants


def canonical_variant(m: int, n: int) -> Tuple[int, ...]:
    """Player II carries t_{m,n}..t_{m,2}, then Player I carries t_{m,1}..t_{1,1}."""
    return (2,) * (n - 1) + (1,) * m


def t_play(grid: TGrid, spec: DuelSpec, variant: Optional[Sequence[int]] = None) -> Play:
    """Build a T-play with noncoinciding action moments.

    At each contested state the carrier acts at t_{mu,nu}; the other player
    acts at the grid time of the next state it carries, or at t = 1 when it
    never carries again.

    Raises:
        PreconditionError: the variant is not a carrier sequence of (m, n)
    """
    if grid.m < spec.m or grid.n < spec.n:
        raise PreconditionError("grid does not cover the duel's resources")
    carriers = tuple(canonical_variant(spec.m, spec.n) if variant is None else variant)
    tau = [1.0] * spec.m
    eta = [1.0] * spec.n
    mu, nu = spec.m, spec.n
    for carrier in carriers:
        if mu == 0 or nu == 0:
            raise PreconditionError(f"carrier sequence {carriers} runs past the last state")
        t = grid.at(mu, nu)
        if carrier == 1:
            tau[mu - 1] = t
            mu -= 1
        elif carrier == 2:
            eta[nu - 1] = t
            nu -= 1
        else:
            raise PreconditionError(f"carrier must be 1 or 2, got {carrier!r}")
    if mu > 0 and nu > 0:
        raise PreconditionError(f"carrier sequence {carriers} stops at contested state")
    return Play(tau=tuple(tau), eta=tuple(eta))


class PlayClass(BaseModel):
    """Membership of a play in P, P' and the T-plays."""

    play: Dict[str, List[float]]
    in_P: bool
    in_P_prime: bool
    is_T_play: bool
    coinciding: bool


def classify_play(spec: DuelSpec, grid: TGrid, play: Play) -> PlayClass:
    """Walk the resource path of `play` and classify it."""
    play.check(spec)
    mu, nu = spec.m, spec.n
    coinciding = False
    t_play_ok = True
    while mu > 0 and nu > 0:
        s, u = play.tau[mu - 1], play.eta[nu - 1]
        t = grid.at(mu, nu)
        if abs(s - t) > TIME_MATCH_TOL and abs(u - t) > TIME_MATCH_TOL:
            t_play_ok = False
        if s < u:
            mu -= 1
        elif u < s:
            nu -= 1
        else:
            coinciding = True
            mu -= 1
            nu -= 1
    survivor = play.tau[:mu] if mu > 0 else play.eta[:nu]
    in_p = all(x == 1.0 for x in survivor)
    last_at_one = (spec.m > 0 and play.tau[0] == 1.0) or (spec.n > 0 and play.eta[0] == 1.0)
    return PlayClass(
        play=play.to_dict(),
        in_P=in_p,
        in_P_prime=in_p and not coinciding and last_at_one,
        is_T_play=t_play_ok,
        coinciding=coinciding,
    )


class GameClassification(BaseModel):
    """Sign conditions on the profit and loss vectors of a duel."""

    product_sign: int
    condition_P1: bool
    a_dominates_b: bool
    b_dominates_a: bool
    quasi_antagonistic: bool
    affine_lambda: Optional[float] = None


def _sign(x: float, scale: float) -> int:
    if abs(x) <= PARETO_TOL * max(scale, 1.0):
        return 0
    return 1 if x > 0 else -1


def classify_game(spec: DuelSpec) -> GameClassification:
    """Classify the duel by A1 A2 - B1 B2 and the Pareto order of A and B.

    When A1 A2 = B1 B2 the payoffs satisfy K1 = -lambda K2 with
    lambda = A1 / B2 if A1 A2 > 0, B1 / A2 if A1 = 0 and A1 / B2 if A2 = 0.
    """
    A1, A2, B1, B2 = spec.A1, spec.A2, spec.B1, spec.B2
    scale = max(abs(A1 * A2), abs(B1 * B2))
    sign = _sign(A1 * A2 - B1 * B2, scale)
    relation = compare(spec.A, spec.B, tol=0.0)
    lam: Optional[float] = None
    if sign == 0:
        lam = B1 / A2 if A1 == 0.0 else A1 / B2
    return GameClassification(
        product_sign=sign,
        condition_P1=(A1 - B1) * (A2 - B2) < 0 or (A1 == B1 and A2 == B2),
        a_dominates_b=relation is Relation.DOMINATES,
        b_dominates_a=relation is Relation.DOMINATED,
        quasi_antagonistic=sign == 0,
        affine_lambda=lam,
    )


def _in_p_normalized(
    spec: DuelSpec, taus: np.ndarray, etas: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Push survivor entries to t = 1; also returns the coinciding flag per play."""
    taus = np.array(taus, dtype=float)
    etas = np.array(etas, dtype=float)
    size = taus.shape[0]
    rows = np.arange(size)
    mu = np.full(size, spec.m)
    nu = np.full(size, spec.n)
    coinciding = np.zeros(size, dtype=bool)
    for _ in range(spec.m + spec.n):
        live = np.flatnonzero((mu > 0) & (nu > 0))
        if live.size == 0:
            break
        s = taus[rows[live], mu[live] - 1]
        u = etas[rows[live], nu[live] - 1]
        coinciding[live] |= s == u
        mu[live] -= (s <= u).astype(int)
        nu[live] -= (u <= s).astype(int)
    taus[np.arange(spec.m)[None, :] < mu[:, None]] = 1.0
    etas[np.arange(spec.n)[None, :] < nu[:, None]] = 1.0
    return taus, etas, coinciding


def _nonincreasing_vectors(points: np.ndarray, length: int) -> np.ndarray:
    if length == 0:
        return np.zeros((1, 0))
    descending = points[::-1]
    return np.array(list(itertools.combinations_with_replacement(descending, length)))


def enumerate_plays(
    spec: DuelSpec, resolution: int = DEFAULT_RESOLUTION, max_resources: int = DEFAULT_MAX_RESOURCES
) -> Tuple[np.ndarray, np.ndarray]:
    """All plays of P with action moments on the grid k / resolution.

    Returns:
        Arrays taus (N, m) and etas (N, n), duplicates removed

    Raises:
        PreconditionError: resolution < 10
        BudgetExceededError: m + n > max_resources
    """
    if resolution < 10:
        raise PreconditionError(f"resolution must be at least 10, got {resolution!r}")
    if spec.m + spec.n > max_resources:
        raise BudgetExceededError(
            f"enumeration of m + n = {spec.m + spec.n} exceeds the budget of {max_resources}"
        )
    points = np.linspace(0.0, 1.0, resolution + 1)
    tau_set = _nonincreasing_vectors(points, spec.m)
    eta_set = _nonincreasing_vectors(points, spec.n)
    taus = np.repeat(tau_set, len(eta_set), axis=0)
    etas = np.tile(eta_set, (len(tau_set), 1))
    taus, etas, _ = _in_p_normalized(spec, taus, etas)
    unique = np.unique(np.hstack([taus, etas]), axis=0)
    logger.debug("Enumerated {} plays of P at resolution {}", len(unique), resolution)
    return unique[:, : spec.m], unique[:, spec.m :]


def random_plays(
    spec: DuelSpec, count: int, seed: int, coincide_prob: float = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    """`count` random plays of P; roughly `coincide_prob` of them share a moment."""
    rng = np.random.default_rng(seed)
    taus = -np.sort(-rng.uniform(size=(count, spec.m)), axis=1)
    etas = -np.sort(-rng.uniform(size=(count, spec.n)), axis=1)
    if spec.m > 0 and spec.n > 0 and coincide_prob > 0.0:
        pick = rng.uniform(size=count) < coincide_prob
        i = rng.integers(0, spec.m, size=count)
        j = rng.integers(0, spec.n, size=count)
        rows = np.flatnonzero(pick)
        etas[rows, j[rows]] = taus[rows, i[rows]]
        etas = -np.sort(-etas, axis=1)
    taus, etas, _ = _in_p_normalized(spec, taus, etas)
    return taus, etas


def as_plays(taus: np.ndarray, etas: np.ndarray) -> List[Play]:
    return [Play(tau=tuple(t), eta=tuple(e)) for t, e in zip(taus, etas)]


def prime_mask(spec: DuelSpec, taus: np.ndarray, etas: np.ndarray) -> np.ndarray:
    """Membership of plays in P' (no coinciding moments, a final action at t = 1)."""
    _, _, coinciding = _in_p_normalized(spec, taus, etas)
    last = np.zeros(len(taus), dtype=bool)
    if spec.m > 0:
        last |= taus[:, 0] == 1.0
    if spec.n > 0:
        last |= etas[:, 0] == 1.0
    return ~coinciding & last


def find_dominating_pair(
    X: np.ndarray, Y: np.ndarray, tol: float = PARETO_TOL
) -> Optional[Tuple[int, int]]:
    """Indices (i, j) with X[i] dominating Y[j], or None.

    Rows are payoff vectors (K1, K2). Candidates are sorted by K1 and a
    suffix maximum of K2 answers each query in logarithmic time.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    Y = np.asarray(Y, dtype=float).reshape(-1, 2)
    if len(X) == 0 or len(Y) == 0:
        return None
    order = np.argsort(X[:, 0], kind="stable")
    k1 = X[order, 0]
    k2 = X[order, 1]
    rev = k2[::-1]
    best = np.maximum.accumulate(rev)
    positions = np.arange(len(rev))
    arg_rev = np.maximum.accumulate(np.where(rev >= best, positions, 0))
    suffix_max = np.append(best[::-1], -np.inf)
    suffix_arg = np.append((len(rev) - 1 - arg_rev)[::-1], -1)

    # strictly better in K2, not worse in K1
    start = np.searchsorted(k1, Y[:, 0] - tol, side="left")
    hit = suffix_max[start] > Y[:, 1] + tol
    # strictly better in K1, not worse in K2
    start_strict = np.searchsorted(k1, Y[:, 0] + tol, side="right")
    hit_strict = suffix_max[start_strict] >= Y[:, 1] - tol
    for mask, first in ((hit, start), (hit_strict, start_strict)):
        found = np.flatnonzero(mask)
        if found.size:
            j = int(found[0])
            return int(order[suffix_arg[first[j]]]), j
    return None


class QuasiAntagonismReport(BaseModel):
    """Affine payoff relations checked on a sample of plays."""

    plays: int
    prime_plays: int
    affine_residual: float
    affine_lambda: Optional[float] = None
    lambda_residual: Optional[float] = None
    tolerance: float = AFFINE_TOL

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        residuals = [self.affine_residual]
        if self.lambda_residual is not None:
            residuals.append(self.lambda_residual)
        return max(residuals) <= self.tolerance


def verify_quasi_antagonism(
    spec: DuelSpec, taus: np.ndarray, etas: np.ndarray
) -> QuasiAntagonismReport:
    """Check the payoff line on P' and, when A1 A2 = B1 B2, K1 = -lambda K2 on all plays.

    On P' every payoff vector satisfies
    K2 = (A1 A2 - B1 B2) / (A1 + B1) - (A2 + B2) / (A1 + B1) * K1.
    """
    k1, k2 = evaluate_batch(spec, taus, etas)
    a1b1 = spec.A1 + spec.B1
    line = (spec.A1 * spec.A2 - spec.B1 * spec.B2) / a1b1 - (spec.A2 + spec.B2) / a1b1 * k1
    prime = prime_mask(spec, taus, etas)
    affine = float(np.max(np.abs(k2 - line)[prime])) if prime.any() else 0.0
    lam = classify_game(spec).affine_lambda
    lam_residual = float(np.max(np.abs(k1 + lam * k2))) if lam is not None else None
    return QuasiAntagonismReport(
        plays=int(len(k1)),
        prime_plays=int(prime.sum()),
        affine_residual=affine,
        affine_lambda=lam,
        lambda_residual=lam_residual,
    )


class LemmaReport(BaseModel):
    """Payoff differences of the pair (p1, p2) differing only in the last units."""

    p1: Dict[str, List[float]]
    p2: Dict[str, List[float]]
    difference: Tuple[float, float]
    predicted: Tuple[float, float]
    residual: float
    relation: Relation
    expected: Relation
    tolerance: float = LEMMA_TOL

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance and self.relation is self.expected


def lemma_pair(
    spec: DuelSpec,
    grid: TGrid,
    tau_rest: Optional[Sequence[float]] = None,
    eta_rest: Optional[Sequence[float]] = None,
) -> Tuple[Play, Play]:
    """The pair p1 = (t_11, ..; 1, ..) and p2 = (t_11, ..; t_11, ..) with a shared tail.

    The tail holds tau_2..tau_m and eta_2..eta_n; it defaults to the canonical
    T-play's and must stay strictly before t_11 so both plays reach (1, 1).

    Raises:
        PreconditionError: m or n is 0, the tail has the wrong length or
            violates the ordering constraints
    """
    if spec.m < 1 or spec.n < 1:
        raise PreconditionError("the pair needs m, n >= 1")
    t11 = grid.at(1, 1)
    if tau_rest is None:
        tau_rest = [grid.at(i, 1) for i in range(2, spec.m + 1)]
    if eta_rest is None:
        eta_rest = [grid.at(spec.m, j) for j in range(2, spec.n + 1)]
    tau_rest, eta_rest = list(tau_rest), list(eta_rest)
    if len(tau_rest) != spec.m - 1 or len(eta_rest) != spec.n - 1:
        raise PreconditionError(
            f"tail lengths ({len(tau_rest)}, {len(eta_rest)}) do not fit ({spec.m}, {spec.n})"
        )
    if any(x >= t11 or x < 0.0 for x in tau_rest + eta_rest):
        raise PreconditionError(f"tail moments must lie in [0, t_11 = {t11!r})")
    p1 = Play(tau=tuple([t11] + tau_rest), eta=tuple([1.0] + eta_rest))
    p2 = Play(tau=tuple([t11] + tau_rest), eta=tuple([t11] + eta_rest))
    for play in (p1, p2):
        if not play.ordering_ok():
            raise PreconditionError(f"tail violates the ordering of action moments: {play}")
    return p1, p2


def check_lemma_l4(
    spec: DuelSpec,
    grid: TGrid,
    tau_rest: Optional[Sequence[float]] = None,
    eta_rest: Optional[Sequence[float]] = None,
) -> LemmaReport:
    """Compare p1 and p2 of `lemma_pair`.

    K_j(p1) - K_j(p2) = (A_j - B_j) P1(t_11) P2(t_11) prod (1 - P1(tau_i)) prod (1 - P2(eta_j)),
    so p1 dominates p2 when A dominates B, and p2 dominates p1 when B dominates A.
    """
    p1, p2 = lemma_pair(spec, grid, tau_rest, eta_rest)
    k_a = evaluate(spec, p1)
    k_b = evaluate(spec, p2)
    t11 = grid.at(1, 1)
    survive = float(
        np.prod(1.0 - spec.P1.evaluate(np.asarray(p1.tau[1:])))
        * np.prod(1.0 - spec.P2.evaluate(np.asarray(p1.eta[1:])))
    )
    core = spec.P1.evaluate(t11) * spec.P2.evaluate(t11) * survive
    predicted = ((spec.A1 - spec.B1) * core, (spec.A2 - spec.B2) * core)
    difference = (k_a.K1 - k_b.K1, k_a.K2 - k_b.K2)
    residual = max(abs(d - p) for d, p in zip(difference, predicted))
    expected = compare(spec.A, spec.B, tol=0.0)
    if expected is Relation.INCOMPARABLE:
        expected = compare(predicted, (0.0, 0.0))
    return LemmaReport(
        p1=p1.to_dict(),
        p2=p2.to_dict(),
        difference=difference,
        predicted=predicted,
        residual=residual,
        relation=compare(k_a.as_tuple(), k_b.as_tuple()),
        expected=expected,
    )


class SuiteResult(BaseModel):
    """One Pareto check; inapplicable suites pass vacuously."""

    name: str
    applicable: bool
    passed: bool
    detail: str
    counterexample: Optional[Dict[str, Any]] = None


class ParetoReport(BaseModel):
    state: Tuple[int, int]
    resolution: int
    enumerated: int
    prime_plays: int
    classification: GameClassification
    suites: List[SuiteResult] = Field(default_factory=list)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return all(suite.passed for suite in self.suites)


def _witness(taus, etas, k, i: int) -> Dict[str, Any]:
    return {
        "tau": [float(x) for x in taus[i]],
        "eta": [float(x) for x in etas[i]],
        "K": [float(k[i, 0]), float(k[i, 1])],
    }


def _skipped(name: str, detail: str) -> SuiteResult:
    return SuiteResult(name=name, applicable=False, passed=True, detail=detail)


def _no_dominance(
    name: str,
    detail: str,
    X: Tuple[np.ndarray, np.ndarray, np.ndarray],
    Y: Tuple[np.ndarray, np.ndarray, np.ndarray],
) -> SuiteResult:
    found = find_dominating_pair(X[2], Y[2])
    if found is None:
        return SuiteResult(name=name, applicable=True, passed=True, detail=detail)
    i, j = found
    return SuiteResult(
        name=name,
        applicable=True,
        passed=False,
        detail=detail,
        counterexample={"dominating": _witness(*X, i), "dominated": _witness(*Y, j)},
    )


def check_pareto_theorems(
    spec: DuelSpec,
    grid: TGrid,
    resolution: int = DEFAULT_RESOLUTION,
    suites: Sequence[str] = SUITES,
    max_resources: int = DEFAULT_MAX_RESOURCES,
) -> ParetoReport:
    """Run the Pareto suites on the plays of P enumerated at `resolution`.

    Suites:
        t4: A1 A2 >= B1 B2 implies no enumerated play dominates a
            noncoinciding T-play.
        t4a: B dominating A implies the coinciding modification of the
            canonical T-play dominates it.
        l6: no play of P' dominates another play of P'.
        l5: A1 A2 <= B1 B2 implies no play of P' dominates a play of
            P minus P'; A1 A2 >= B1 B2 implies the reverse.

    Raises:
        PreconditionError: unknown suite name or resolution < 10
        BudgetExceededError: m + n > max_resources
    """
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise PreconditionError(f"unknown Pareto suites {unknown}; known: {list(SUITES)}")
    taus, etas = enumerate_plays(spec, resolution, max_resources)
    k = np.column_stack(evaluate_batch(spec, taus, etas))
    prime = prime_mask(spec, taus, etas)
    everything = (taus, etas, k)
    in_prime = (taus[prime], etas[prime], k[prime])
    outside = (taus[~prime], etas[~prime], k[~prime])
    game = classify_game(spec)
    results: List[SuiteResult] = []

    for suite in suites:
        if suite == "t4":
            if game.product_sign < 0:
                results.append(_skipped(suite, "A1A2 < B1B2"))
                continue
            variants = [t_play(grid, spec, v) for v in t_play_variants(spec.m, spec.n)]
            t_taus = np.array([p.tau for p in variants]).reshape(len(variants), spec.m)
            t_etas = np.array([p.eta for p in variants]).reshape(len(variants), spec.n)
            t_k = np.column_stack(evaluate_batch(spec, t_taus, t_etas))
            results.append(
                _no_dominance(
                    suite,
                    f"{len(variants)} T-plays against {len(k)} enumerated plays",
                    everything,
                    (t_taus, t_etas, t_k),
                )
            )
        elif suite == "t4a":
            if not game.b_dominates_a or spec.m < 1 or spec.n < 1:
                results.append(_skipped(suite, "B does not dominate A"))
                continue
            pair = check_lemma_l4(spec, grid)
            ok = pair.relation is Relation.DOMINATED
            results.append(
                SuiteResult(
                    name=suite,
                    applicable=True,
                    passed=ok,
                    detail="coinciding modification dominates the canonical T-play",
                    counterexample=None if ok else {"p1": pair.p1, "p2": pair.p2},
                )
            )
        elif suite == "l6":
            results.append(
                _no_dominance(
                    suite, f"pairwise within {int(prime.sum())} plays of P'", in_prime, in_prime
                )
            )
        elif suite == "l5":
            if game.product_sign <= 0:
                results.append(
                    _no_dominance(suite + ":prime-over-rest", "A1A2 <= B1B2", in_prime, outside)
                )
            if game.product_sign >= 0:
                results.append(
                    _no_dominance(suite + ":rest-over-prime", "A1A2 >= B1B2", outside, in_prime)
                )

    report = ParetoReport(
        state=(spec.m, spec.n),
        resolution=resolution,
        enumerated=int(len(k)),
        prime_plays=int(prime.sum()),
        classification=game,
        suites=results,
    )
    for suite_result in report.suites:
        if not suite_result.passed:
            logger.warning(
                "Pareto suite {} failed: {}", suite_result.name, suite_result.counterexample
            )
    verdict = "passed" if report.passed else "FAILED"
    logger.info("Pareto suites at state {}: {}", report.state, verdict)
    return report
