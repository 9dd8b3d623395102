"""Tests for payoff evaluation of plays."""

import numpy as np
import pytest

from noisy_duels.errors import PreconditionError
from noisy_duels.models import Play
from noisy_duels.pareto import as_plays, random_plays
from noisy_duels.payoff import (
    check_consistency,
    equivalent,
    evaluate,
    evaluate_batch,
    loss_representation,
    outcome_distribution,
)


def test_first_shot_then_certain_reply(unit_spec):
    """Player I acts at 1/2, Player II answers at t = 1."""
    play = Play(tau=(0.5,), eta=(1.0,))
    k = evaluate(unit_spec, play)
    assert k.K1 == pytest.approx(0.0, abs=1e-15)
    assert k.K2 == pytest.approx(0.0, abs=1e-15)
    q = outcome_distribution(unit_spec, play)
    assert (q.Q0, q.Q1, q.Q2, q.Q3) == pytest.approx((0.0, 0.5, 0.5, 0.0))


def test_coinciding_moments(unit_spec):
    """A tie at 1/2 splits the mass over all four outcomes."""
    play = Play(tau=(0.5,), eta=(0.5,))
    q = outcome_distribution(unit_spec, play)
    assert (q.Q0, q.Q1, q.Q2, q.Q3) == pytest.approx((0.25, 0.25, 0.25, 0.25))
    assert q.total == pytest.approx(1.0)
    assert evaluate(unit_spec, play).as_tuple() == pytest.approx((0.0, 0.0))


def test_asymmetric_payoffs(make_spec):
    """K1 = A1 p - B1 (1 - p) and K2 = -B2 p + A2 (1 - p) when Player II waits."""
    spec = make_spec(A=(2.0, 3.0), B=(2.0, 3.0))
    k = evaluate(spec, Play(tau=(0.3,), eta=(1.0,)))
    assert k.K1 == pytest.approx(-0.8)
    assert k.K2 == pytest.approx(1.2)


def test_boundary_payoffs(make_spec):
    """One side without resources: the other one is certain to succeed."""
    spec = make_spec(m=2, n=0, A=(2.0, 1.0), B=(1.0, 3.0))
    assert evaluate(spec, Play((0.4, 0.2), ())).as_tuple() == (2.0, -3.0)
    assert evaluate(make_spec(m=0, n=1), Play((), (0.7,))).as_tuple() == (-1.0, 1.0)
    assert evaluate(make_spec(m=0, n=0), Play((), ())).as_tuple() == (0.0, 0.0)


def test_antagonistic_reduction(make_spec):
    """A1 = B2 and A2 = B1 give K1 = -K2 on every play."""
    spec = make_spec(m=3, n=2, A=(1.5, 0.7), B=(0.7, 1.5), P2="power:2")
    assert spec.is_antagonistic
    taus, etas = random_plays(spec, 1000, seed=3, coincide_prob=0.3)
    k1, k2 = evaluate_batch(spec, taus, etas)
    assert np.max(np.abs(k1 + k2)) <= 1e-12


def test_batch_matches_recursion(make_spec):
    """The vectorized walk agrees with the recursive evaluation."""
    spec = make_spec(m=3, n=3, A=(2.0, 0.5), B=(1.0, 1.5), P1="power:0.5", P2="power:2")
    taus, etas = random_plays(spec, 200, seed=5, coincide_prob=0.4)
    k1, k2 = evaluate_batch(spec, taus, etas)
    for play, a, b in zip(as_plays(taus, etas), k1, k2):
        k = evaluate(spec, play)
        assert k.K1 == pytest.approx(a, abs=1e-12)
        assert k.K2 == pytest.approx(b, abs=1e-12)


def test_payoffs_are_linear_in_stakes(make_spec):
    """K(a X + b Y) = a K(X) + b K(Y) for stakes X = (A, B) and Y = (A', B')."""
    first = make_spec(m=3, n=2, A=(2.0, 0.5), B=(1.0, 1.5), P2="power:2")
    second = first.with_payoffs(A=(0.3, 4.0), B=(2.5, 0.0))
    a, b = 0.7, 2.5
    mixed = first.with_payoffs(
        A=[a * x + b * y for x, y in zip(first.A, second.A)],
        B=[a * x + b * y for x, y in zip(first.B, second.B)],
    )
    taus, etas = random_plays(first, 300, seed=13, coincide_prob=0.3)
    k_first = evaluate_batch(first, taus, etas)
    k_second = evaluate_batch(second, taus, etas)
    k_mixed = evaluate_batch(mixed, taus, etas)
    for player in (0, 1):
        expected = a * k_first[player] + b * k_second[player]
        np.testing.assert_allclose(k_mixed[player], expected, rtol=0.0, atol=1e-12)


def test_payoffs_stay_in_bounds(make_spec):
    spec = make_spec(m=2, n=3, A=(2.0, 0.5), B=(1.0, 1.5))
    taus, etas = random_plays(spec, 500, seed=9, coincide_prob=0.2)
    k1, k2 = evaluate_batch(spec, taus, etas)
    tol = 1e-12
    assert np.all((k1 >= -spec.B1 - tol) & (k1 <= spec.A1 + tol))
    assert np.all((k2 >= -spec.B2 - tol) & (k2 <= spec.A2 + tol))


def test_consistency_with_outcomes(make_spec):
    """K = A Q - B Q and the loss form agree with the recursion."""
    spec = make_spec(m=2, n=2, A=(2.0, 0.5), B=(1.0, 1.5), P2="power:3")
    for play in as_plays(*random_plays(spec, 50, seed=1, coincide_prob=0.5)):
        report = check_consistency(spec, play)
        assert report.passed, report
        alt = loss_representation(spec, outcome_distribution(spec, play))
        assert alt.K1 == pytest.approx(report.payoff[0], abs=1e-12)


def test_equivalent_plays(unit_spec):
    """After Player I's only unit the moment of Player II no longer matters."""
    first = Play(tau=(0.3,), eta=(1.0,))
    second = Play(tau=(0.3,), eta=(0.9,))
    assert equivalent(unit_spec, first, second)
    assert not equivalent(unit_spec, first, Play(tau=(0.4,), eta=(1.0,)))


def test_preconditions(make_spec):
    """Wrong dimensions and increasing vectors are rejected."""
    spec = make_spec(m=2, n=1)
    with pytest.raises(PreconditionError):
        evaluate(spec, Play(tau=(0.5,), eta=(1.0,)))
    with pytest.raises(PreconditionError):
        evaluate(spec, Play(tau=(0.2, 0.5), eta=(1.0,)))
    with pytest.raises(PreconditionError):
        evaluate(spec, Play(tau=(1.2, 0.5), eta=(1.0,)))
    with pytest.raises(PreconditionError):
        evaluate_batch(spec, np.ones((3, 2)), np.ones((2, 1)))
