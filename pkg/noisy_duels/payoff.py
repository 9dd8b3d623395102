"""Expected payoffs K1, K2 and outcome probabilities of a play.

A play is evaluated by the three-branch recursion on the first moments
tau_m, eta_n: the earlier actor fires first, equal moments fire together,
and the recursion continues on the remaining vectors. When one player runs
out of resources the other one is certain to succeed at t = 1.
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, computed_field

from noisy_duels.errors import PreconditionError
from noisy_duels.models import DuelSpec, OutcomeDistribution, PayoffVector, Play

CONSISTENCY_TOL = 1e-12


def _terminal(spec: DuelSpec, mu: int, nu: int) -> Tuple[float, float]:
    if mu == 0 and nu == 0:
        return 0.0, 0.0
    if nu == 0:
        return spec.A1, -spec.B2
    return -spec.B1, spec.A2


def _recurse(spec: DuelSpec, tau: Tuple[float, ...], eta: Tuple[float, ...], mu: int, nu: int):
    if mu == 0 or nu == 0:
        return _terminal(spec, mu, nu)
    s, u = tau[mu - 1], eta[nu - 1]
    if s < u:
        p = spec.P1.evaluate(s)
        k1, k2 = _recurse(spec, tau, eta, mu - 1, nu)
        return spec.A1 * p + (1.0 - p) * k1, -spec.B2 * p + (1.0 - p) * k2
    if s > u:
        q = spec.P2.evaluate(u)
        k1, k2 = _recurse(spec, tau, eta, mu, nu - 1)
        return -spec.B1 * q + (1.0 - q) * k1, spec.A2 * q + (1.0 - q) * k2
    p = spec.P1.evaluate(s)
    q = spec.P2.evaluate(s)
    k1, k2 = _recurse(spec, tau, eta, mu - 1, nu - 1)
    both_miss = (1.0 - p) * (1.0 - q)
    return (
        spec.A1 * p * (1.0 - q) - spec.B1 * (1.0 - p) * q + both_miss * k1,
        spec.A2 * q * (1.0 - p) - spec.B2 * p * (1.0 - q) + both_miss * k2,
    )


def evaluate(spec: DuelSpec, play: Play) -> PayoffVector:
    """Expected payoffs (K1, K2) of `play`.

    Args:
        spec: Duel definition
        play: Ordered action moments with dimensions (spec.m, spec.n)

    Returns:
        PayoffVector with -B_j <= K_j <= A_j

    Raises:
        PreconditionError: dimension mismatch or ordering violation
    """
    play.check(spec)
    k1, k2 = _recurse(spec, play.tau, play.eta, spec.m, spec.n)
    return PayoffVector(K1=k1, K2=k2)


def outcome_distribution(spec: DuelSpec, play: Play) -> OutcomeDistribution:
    """Probabilities Q0..Q3 of the four duel results for `play`."""
    play.check(spec)
    q0 = q1 = q2 = q3 = 0.0
    mass = 1.0
    mu, nu = spec.m, spec.n
    while mu > 0 and nu > 0:
        s, u = play.tau[mu - 1], play.eta[nu - 1]
        if s < u:
            p = spec.P1.evaluate(s)
            q1 += mass * p
            mass *= 1.0 - p
            mu -= 1
        elif s > u:
            q = spec.P2.evaluate(u)
            q2 += mass * q
            mass *= 1.0 - q
            nu -= 1
        else:
            p = spec.P1.evaluate(s)
            q = spec.P2.evaluate(s)
            q1 += mass * p * (1.0 - q)
            q2 += mass * q * (1.0 - p)
            q3 += mass * p * q
            mass *= (1.0 - p) * (1.0 - q)
            mu -= 1
            nu -= 1
    if mu > 0:
        q1 += mass
    elif nu > 0:
        q2 += mass
    else:
        q0 += mass
    return OutcomeDistribution(Q0=q0, Q1=q1, Q2=q2, Q3=q3)


def loss_representation(spec: DuelSpec, outcome: OutcomeDistribution) -> PayoffVector:
    """Payoffs rewritten through Q2 and the no-decision mass Q0 + Q3."""
    undecided = outcome.Q0 + outcome.Q3
    return PayoffVector(
        K1=spec.A1 - (spec.A1 + spec.B1) * outcome.Q2 - spec.A1 * undecided,
        K2=-spec.B2 + (spec.A2 + spec.B2) * outcome.Q2 + spec.B2 * undecided,
    )


class ConsistencyReport(BaseModel):
    """Cross-check of the payoff recursion against the outcome probabilities."""

    payoff: Tuple[float, float]
    outcome: Tuple[float, float, float, float]
    residual_1: float
    residual_2: float
    loss_form_residual: float
    probability_mass_residual: float
    tolerance: float = CONSISTENCY_TOL

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return (
            max(
                self.residual_1,
                self.residual_2,
                self.loss_form_residual,
                self.probability_mass_residual,
            )
            <= self.tolerance
        )


def check_consistency(spec: DuelSpec, play: Play) -> ConsistencyReport:
    """Check K1 = A1 Q1 - B1 Q2 and K2 = A2 Q2 - B2 Q1 for `play`."""
    k = evaluate(spec, play)
    q = outcome_distribution(spec, play)
    alt = loss_representation(spec, q)
    return ConsistencyReport(
        payoff=k.as_tuple(),
        outcome=(q.Q0, q.Q1, q.Q2, q.Q3),
        residual_1=abs(k.K1 - (spec.A1 * q.Q1 - spec.B1 * q.Q2)),
        residual_2=abs(k.K2 - (spec.A2 * q.Q2 - spec.B2 * q.Q1)),
        loss_form_residual=max(abs(k.K1 - alt.K1), abs(k.K2 - alt.K2)),
        probability_mass_residual=abs(q.total - 1.0),
    )


def equivalent(spec: DuelSpec, first: Play, second: Play, tol: float = CONSISTENCY_TOL) -> bool:
    """True when both plays give the same payoff vector (within `tol`)."""
    a = evaluate(spec, first)
    b = evaluate(spec, second)
    return abs(a.K1 - b.K1) <= tol and abs(a.K2 - b.K2) <= tol


def evaluate_batch(
    spec: DuelSpec, taus: np.ndarray, etas: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized `evaluate` for N plays at once.

    Args:
        spec: Duel definition
        taus: Array (N, m); row r holds (tau_1, ..., tau_m) of play r
        etas: Array (N, n)

    Returns:
        Arrays K1, K2 of length N
    """
    taus = np.atleast_2d(np.asarray(taus, dtype=float))
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    if taus.shape[1] != spec.m or etas.shape[1] != spec.n or taus.shape[0] != etas.shape[0]:
        raise PreconditionError(
            f"batch shapes {taus.shape} and {etas.shape} do not fit duel ({spec.m}, {spec.n})"
        )
    size = taus.shape[0]
    mu = np.full(size, spec.m)
    nu = np.full(size, spec.n)
    mass = np.ones(size)
    k1 = np.zeros(size)
    k2 = np.zeros(size)
    rows = np.arange(size)

    for _ in range(spec.m + spec.n):
        live = np.flatnonzero((mu > 0) & (nu > 0))
        if live.size == 0:
            break
        s = taus[rows[live], mu[live] - 1]
        u = etas[rows[live], nu[live] - 1]
        p = spec.P1.evaluate(s)
        q = spec.P2.evaluate(u)
        first = s < u
        second = s > u
        tie = ~(first | second)
        w = mass[live]

        gain1 = np.where(first, spec.A1 * p, 0.0)
        gain1 += np.where(second, -spec.B1 * q, 0.0)
        gain1 += np.where(tie, spec.A1 * p * (1.0 - q) - spec.B1 * (1.0 - p) * q, 0.0)
        gain2 = np.where(first, -spec.B2 * p, 0.0)
        gain2 += np.where(second, spec.A2 * q, 0.0)
        gain2 += np.where(tie, spec.A2 * q * (1.0 - p) - spec.B2 * p * (1.0 - q), 0.0)
        survive = np.where(first, 1.0 - p, np.where(second, 1.0 - q, (1.0 - p) * (1.0 - q)))

        k1[live] += w * gain1
        k2[live] += w * gain2
        mass[live] = w * survive
        mu[live] -= (first | tie).astype(int)
        nu[live] -= (second | tie).astype(int)

    only1 = (mu > 0) & (nu == 0)
    only2 = (mu == 0) & (nu > 0)
    k1 += np.where(only1, mass * spec.A1, 0.0) + np.where(only2, -mass * spec.B1, 0.0)
    k2 += np.where(only1, -mass * spec.B2, 0.0) + np.where(only2, mass * spec.A2, 0.0)
    return k1, k2
