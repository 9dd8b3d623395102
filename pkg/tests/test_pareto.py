"""Tests for Pareto relations, T-plays and the Pareto suites."""

import numpy as np
import pytest

from noisy_duels.equilibrium import value_closed
from noisy_duels.errors import BudgetExceededError, PreconditionError
from noisy_duels.models import Play
from noisy_duels.pareto import (
    Relation,
    as_plays,
    canonical_variant,
    check_lemma_l4,
    check_pareto_theorems,
    classify_game,
    classify_play,
    compare,
    dominates,
    enumerate_plays,
    find_dominating_pair,
    prime_mask,
    random_plays,
    t_play,
    t_play_variants,
    verify_quasi_antagonism,
)
from noisy_duels.payoff import evaluate, evaluate_batch
from noisy_duels.tgrid import solve_grid


def _grid(spec):
    return solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1))


@pytest.mark.parametrize(
    "a, b, relation",
    [
        ((1.0, 1.0), (0.0, 0.0), Relation.DOMINATES),
        ((1.0, 0.0), (1.0, 0.0), Relation.EQUIVALENT),
        ((0.0, 0.0), (0.0, 1.0), Relation.DOMINATED),
        ((1.0, 0.0), (0.0, 1.0), Relation.INCOMPARABLE),
        ((1.0, 5e-13), (1.0, 0.0), Relation.EQUIVALENT),
    ],
)
def test_compare(a, b, relation):
    assert compare(a, b) is relation


def test_dominates(make_spec):
    spec = make_spec(A=(2.0, 2.0), B=(1.0, 1.0))
    early = Play(tau=(0.5,), eta=(1.0,))
    tie = Play(tau=(0.5,), eta=(0.5,))
    assert dominates(spec, early, tie)
    assert not dominates(spec, tie, early)


def test_dominance_is_a_strict_partial_order(make_spec):
    """Irreflexive, asymmetric and transitive over every sampled triple."""
    spec = make_spec(m=2, n=2, A=(2.0, 1.5), B=(1.0, 0.5), P2="power:2")
    taus, etas = random_plays(spec, 60, seed=17, coincide_prob=0.3)
    k = np.column_stack(evaluate_batch(spec, taus, etas))
    size = len(k)
    D = np.array(
        [
            [compare(k[i], k[j], tol=0.0) is Relation.DOMINATES for j in range(size)]
            for i in range(size)
        ]
    )
    assert not D.diagonal().any()
    assert not (D & D.T).any()
    chains = (D.astype(int) @ D.astype(int)) > 0
    assert chains.any()
    assert np.all(D[chains])

    plays = as_plays(taus, etas)
    for i, j in [(0, 0), (0, 1), (1, 0), (5, 9), (9, 5)]:
        assert not dominates(spec, plays[i], plays[i])
        assert dominates(spec, plays[i], plays[j]) == bool(D[i, j])


def test_canonical_t_play(make_spec):
    """(2, 1): Player I carries t_21 and t_11, Player II waits for t = 1."""
    spec = make_spec(m=2, n=1)
    play = t_play(_grid(spec), spec)
    assert play.tau == pytest.approx((0.5, 1.0 / 3.0), abs=1e-12)
    assert play.eta == (1.0,)
    assert evaluate(spec, play).as_tuple() == pytest.approx((1.0 / 3.0, -1.0 / 3.0), abs=1e-10)


def test_t_play_variants():
    assert t_play_variants(2, 1) == [(1, 1), (1, 2), (2,)]
    assert len(t_play_variants(2, 2)) == 6
    assert canonical_variant(2, 3) == (2, 2, 1, 1)
    assert t_play_variants(0, 2) == [()]


def test_every_t_play_achieves_the_value(random_specs):
    """Every noncoinciding T-play variant evaluates to v_{mn}."""
    for spec in random_specs[:5]:
        small = spec.with_resources(3, 3)
        grid = _grid(small)
        v = value_closed(small, grid).at(3, 3)
        for variant in t_play_variants(3, 3):
            k = evaluate(small, t_play(grid, small, variant))
            assert k.as_tuple() == pytest.approx(v, abs=1e-9)


def test_t_play_rejects_bad_variants(make_spec):
    spec = make_spec(m=2, n=1)
    grid = _grid(spec)
    with pytest.raises(PreconditionError):
        t_play(grid, spec, (1,))
    with pytest.raises(PreconditionError):
        t_play(grid, spec, (3, 1))
    with pytest.raises(PreconditionError):
        t_play(grid, spec, (2, 1))


def test_classify_play(make_spec):
    spec = make_spec(m=2, n=1)
    grid = _grid(spec)
    classes = classify_play(spec, grid, t_play(grid, spec))
    assert classes.in_P and classes.in_P_prime and classes.is_T_play
    assert not classes.coinciding
    tie = classify_play(spec, grid, Play(tau=(0.5, 0.4), eta=(0.4,)))
    assert tie.coinciding and not tie.in_P_prime
    early = classify_play(spec, grid, Play(tau=(0.9, 0.2), eta=(0.8,)))
    assert not early.in_P


def test_classify_game(make_spec):
    """Quasi-antagonism and lambda when A1 A2 = B1 B2."""
    quasi = classify_game(make_spec(A=(2.0, 3.0), B=(2.0, 3.0)))
    assert quasi.quasi_antagonistic
    assert quasi.affine_lambda == pytest.approx(2.0 / 3.0)
    strict = classify_game(make_spec(A=(2.0, 2.0), B=(1.0, 1.0)))
    assert strict.product_sign == 1 and strict.a_dominates_b
    assert strict.affine_lambda is None
    zero = classify_game(make_spec(A=(0.0, 2.0), B=(1.0, 0.0)))
    assert zero.quasi_antagonistic
    assert zero.affine_lambda == pytest.approx(0.5)


def test_quasi_antagonism_implies_opposed_stakes(make_spec):
    """A1 A2 = B1 B2 forces (A1 - B1)(A2 - B2) < 0 unless A = B."""
    rng = np.random.default_rng(23)
    cases = [((2.0, 3.0), (2.0, 3.0)), ((0.0, 2.0), (1.0, 0.0)), ((1.0, 0.0), (0.0, 4.0))]
    for _ in range(50):
        A1, A2, B1 = (float(x) for x in rng.uniform(0.1, 5.0, size=3))
        cases.append(((A1, A2), (B1, A1 * A2 / B1)))
    for A, B in cases:
        game = classify_game(make_spec(A=A, B=B))
        assert game.quasi_antagonistic
        assert game.condition_P1
        assert (A[0] - B[0]) * (A[1] - B[1]) < 0 or A == B


def test_quasi_antagonism_on_random_plays(make_spec):
    """K1 = -lambda K2 on every play and the affine line on P'."""
    for A, B in [((2.0, 3.0), (2.0, 3.0)), ((1.0, 4.0), (2.0, 2.0)), ((0.0, 2.0), (1.0, 0.0))]:
        spec = make_spec(m=2, n=2, A=A, B=B, P2="power:2")
        taus, etas = random_plays(spec, 1000, seed=2, coincide_prob=0.3)
        report = verify_quasi_antagonism(spec, taus, etas)
        assert report.passed, report
        assert report.prime_plays > 0


def test_affine_line_holds_without_quasi_antagonism(make_spec):
    spec = make_spec(m=2, n=3, A=(2.0, 0.5), B=(1.0, 1.5))
    taus, etas = random_plays(spec, 500, seed=8)
    report = verify_quasi_antagonism(spec, taus, etas)
    assert report.affine_lambda is None
    assert report.affine_residual <= 1e-10


def test_lemma_pair_difference(make_spec):
    """p1 beats p2 by (A - B) P1(t_11) P2(t_11) = 1/4 per player."""
    spec = make_spec(A=(2.0, 2.0), B=(1.0, 1.0))
    report = check_lemma_l4(spec, _grid(spec))
    assert report.passed
    assert report.difference == pytest.approx((0.25, 0.25), abs=1e-12)
    assert report.relation is Relation.DOMINATES


def test_lemma_pair_with_tail(make_spec):
    spec = make_spec(m=2, n=2, A=(1.0, 1.0), B=(3.0, 2.0))
    grid = _grid(spec)
    report = check_lemma_l4(spec, grid, tau_rest=[0.1], eta_rest=[0.2])
    assert report.passed
    assert report.relation is Relation.DOMINATED
    with pytest.raises(PreconditionError):
        check_lemma_l4(spec, grid, tau_rest=[0.9], eta_rest=[0.2])


def test_enumerate_plays(make_spec):
    spec = make_spec(m=1, n=1)
    taus, etas = enumerate_plays(spec, resolution=10)
    assert taus.shape[1] == 1 and etas.shape[1] == 1
    rows = {(float(t), float(e)) for t, e in zip(taus[:, 0], etas[:, 0])}
    assert (0.5, 1.0) in rows and (0.5, 0.5) in rows
    assert (0.3, 0.7) not in rows
    assert len(rows) == len(taus)
    with pytest.raises(PreconditionError):
        enumerate_plays(spec, resolution=5)
    with pytest.raises(BudgetExceededError):
        enumerate_plays(make_spec(m=3, n=2), resolution=10, max_resources=4)


def test_prime_mask(make_spec):
    spec = make_spec(m=1, n=1)
    taus = np.array([[0.5], [0.5], [1.0]])
    etas = np.array([[1.0], [0.5], [1.0]])
    np.testing.assert_array_equal(prime_mask(spec, taus, etas), [True, False, False])


def test_find_dominating_pair():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert find_dominating_pair(X, np.array([[0.5, 1.0]])) == (1, 0)
    assert find_dominating_pair(X, np.array([[1.0, 1.0], [2.0, -1.0]])) is None
    assert find_dominating_pair(np.array([[1.0, 0.0]]), np.array([[1.0 - 1e-13, 0.0]])) is None
    assert find_dominating_pair(np.empty((0, 2)), X) is None


@pytest.mark.parametrize(
    "A, B",
    [
        ((1.0, 1.0), (1.0, 1.0)),
        ((2.0, 2.0), (1.0, 1.0)),
        ((1.0, 1.0), (2.0, 2.0)),
        ((3.0, 0.5), (1.0, 2.0)),
    ],
)
def test_pareto_suites_pass(make_spec, A, B):
    spec = make_spec(m=1, n=2, A=A, B=B)
    report = check_pareto_theorems(spec, _grid(spec), resolution=10)
    assert report.passed, [s for s in report.suites if not s.passed]
    assert report.enumerated > report.prime_plays > 0
    names = {s.name for s in report.suites}
    assert {"t4", "t4a", "l6"} <= names


def test_coinciding_modification_dominates_when_losses_dominate(make_spec):
    spec = make_spec(A=(1.0, 1.0), B=(2.0, 2.0))
    report = check_pareto_theorems(spec, _grid(spec), resolution=10, suites=["t4a"])
    (suite,) = report.suites
    assert suite.applicable and suite.passed


def test_unknown_suite(unit_spec):
    with pytest.raises(PreconditionError):
        check_pareto_theorems(unit_spec, _grid(unit_spec), resolution=10, suites=["t9"])


@pytest.mark.slow
@pytest.mark.parametrize("m, n", [(2, 2), (3, 1), (1, 3)])
@pytest.mark.parametrize(
    "A, B",
    [
        ((2.0, 3.0), (2.0, 3.0)),
        ((1.0, 4.0), (2.0, 2.0)),
        ((2.0, 2.0), (1.0, 1.0)),
        ((1.0, 1.0), (2.0, 2.0)),
        ((3.0, 0.5), (1.0, 2.0)),
    ],
)
def test_pareto_suites_full_resolution(make_spec, m, n, A, B):
    """Every applicable suite passes on the 50-point enumeration."""
    spec = make_spec(m=m, n=n, A=A, B=B, P2="power:2")
    report = check_pareto_theorems(spec, _grid(spec), resolution=50)
    assert report.passed, [s for s in report.suites if not s.passed]
    assert report.enumerated > report.prime_plays > 0
    assert any(s.applicable for s in report.suites if s.name.startswith("l5"))
