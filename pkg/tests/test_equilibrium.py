"""Tests for equilibrium values and epsilon-strategies."""

import numpy as np
import pytest

from noisy_duels.equilibrium import (
    BehavioralStrategy,
    companion_zero_sum,
    epsilon_strategy,
    lambda_coefficient,
    maxmin_value,
    recurrence_paths,
    value_closed,
    value_recurrence,
)
from noisy_duels.errors import PreconditionError, SolverError
from noisy_duels.tgrid import perturbed, solve_grid


def _grid(spec):
    return solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1))


def test_value_oracle(make_spec):
    """Linear symmetric duel (2, 1) with A = B = (1, 1) has v = (1/3, -1/3)."""
    spec = make_spec(m=2, n=1)
    v1, v2 = value_closed(spec, _grid(spec)).at(2, 1)
    assert v1 == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert v2 == pytest.approx(-1.0 / 3.0, abs=1e-10)


def test_symmetric_single_unit_value_is_zero(unit_spec):
    assert value_closed(unit_spec, _grid(unit_spec)).at(1, 1) == pytest.approx((0.0, 0.0))


def test_boundary_values(make_spec):
    """Values on the boundary are the certain-success payoffs."""
    spec = make_spec(m=2, n=2, A=(2.0, 3.0), B=(0.5, 1.5))
    table = value_closed(spec, _grid(spec))
    assert table.at(2, 0) == (2.0, -1.5)
    assert table.at(0, 1) == (-0.5, 3.0)
    assert table.at(0, 0) == (0.0, 0.0)


def test_closed_form_matches_recurrences(random_specs):
    """Closed form and the four recurrence paths agree to 1e-10."""
    for spec in random_specs:
        grid = _grid(spec)
        closed = value_closed(spec, grid)
        paths = recurrence_paths(spec, grid)
        assert np.max(np.abs(closed.v1 - paths["v1_by_mu"])) <= 1e-10
        assert np.max(np.abs(closed.v1 - paths["v1_by_nu"])) <= 1e-10
        assert np.max(np.abs(closed.v2 - paths["v2_by_nu"])) <= 1e-10
        assert np.max(np.abs(closed.v2 - paths["v2_by_mu"])) <= 1e-10
        assert closed.max_difference(value_recurrence(spec, grid)) <= 1e-10


def test_values_are_monotone_in_resources(random_specs):
    """v1 gains with own resources and loses with the opponent's; v2 mirrors it."""
    for spec in random_specs:
        table = value_closed(spec, _grid(spec))
        assert np.all(np.diff(table.v1, axis=0) >= -1e-12)
        assert np.all(np.diff(table.v1, axis=1) <= 1e-12)
        assert np.all(np.diff(table.v2, axis=0) <= 1e-12)
        assert np.all(np.diff(table.v2, axis=1) >= -1e-12)


def test_closed_forms_must_agree(make_spec):
    """A grid off by 1e-8 is caught by whichever value is scaled by the larger stakes."""
    spec = make_spec(A=(1e-4, 10.0), B=(1e-4, 10.0))
    moved = perturbed(_grid(spec), 1, 1, 1e-8)
    with pytest.raises(SolverError, match="v2"):
        value_closed(spec, moved)
    mirrored = make_spec(A=(10.0, 1e-4), B=(10.0, 1e-4))
    with pytest.raises(SolverError, match="v1"):
        value_closed(mirrored, perturbed(_grid(mirrored), 1, 1, 1e-8))


def test_antagonistic_values(make_spec):
    spec = make_spec(m=3, n=4, A=(1.2, 0.4), B=(0.4, 1.2), P1="power:2")
    table = value_closed(spec, _grid(spec))
    assert np.max(np.abs(table.v1 + table.v2)) <= 1e-10


def test_value_table_frame(make_spec):
    spec = make_spec(m=2, n=1)
    frame = value_closed(spec, _grid(spec)).to_frame()
    assert list(frame.columns) == ["mu", "nu", "v1", "v2"]
    assert len(frame) == 6
    row = frame[(frame.mu == 2) & (frame.nu == 1)].iloc[0]
    assert row.v1 == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_grid_must_fit(make_spec, linear):
    spec = make_spec(m=3, n=3)
    with pytest.raises(PreconditionError):
        value_closed(spec, solve_grid(linear, linear, 2, 3))
    other = make_spec(m=1, n=1, P2="power:2")
    with pytest.raises(PreconditionError):
        value_closed(other, solve_grid(linear, linear, 1, 1))


@pytest.mark.parametrize(
    "A, B, expected",
    [((1.0, 1.0), (1.0, 1.0), 0.25), ((2.0, 1.0), (1.0, 1.0), 1.0 / 6.0)],
)
def test_lambda_coefficient(make_spec, A, B, expected):
    assert lambda_coefficient(make_spec(A=A, B=B)) == pytest.approx(expected)


def test_epsilon_strategy_supports(make_spec):
    """Supports start at t_{mu,nu}, stay inside the corridor and gain less than lambda eps."""
    spec = make_spec(m=3, n=2, A=(2.0, 1.0), B=(0.5, 1.5), P2="power:2")
    grid = _grid(spec)
    x_eps, y_eps, params = epsilon_strategy(spec, grid, 0.05)
    bound = params.lam * params.epsilon
    for (mu, nu), (lo, hi) in x_eps.supports.items():
        t = grid.at(mu, nu)
        assert lo == t
        assert hi == pytest.approx(t + params.at(mu, nu))
        assert hi < grid.corridor(mu, nu)
        assert spec.P1.evaluate(hi) - spec.P1.evaluate(lo) < bound
        assert spec.P2.evaluate(hi) - spec.P2.evaluate(lo) < bound
        assert y_eps.support(mu, nu) == (lo, hi)
    assert np.isnan(params.delta[0, 1])


def test_support_length_shrinks_with_epsilon(make_spec):
    spec = make_spec(m=2, n=2)
    grid = _grid(spec)
    previous = None
    for epsilon in (0.2, 0.05, 0.01, 0.001):
        _, _, params = epsilon_strategy(spec, grid, epsilon)
        if previous is not None:
            assert np.all(params.delta[1:, 1:] <= previous[1:, 1:])
        previous = params.delta
    assert previous[1, 1] < 0.001


def test_epsilon_must_be_positive(unit_spec):
    grid = _grid(unit_spec)
    for epsilon in (0.0, -0.1):
        with pytest.raises(PreconditionError):
            epsilon_strategy(unit_spec, grid, epsilon)


def test_behavioral_strategy_boundary_states():
    """No action without own resources; act at t = 1 once the opponent is out."""
    strategy = BehavioralStrategy(player=1, m=1, n=1, supports={(1, 1): (0.5, 0.6)})
    assert strategy.support(0, 1) is None
    assert strategy.support(1, 0) == (1.0, 1.0)
    assert strategy.conditional((1, 1), 0.2) == (0.5, 0.6)
    assert strategy.conditional((1, 1), 0.55) == (0.55, 0.6)
    assert strategy.conditional((1, 1), 0.7) == (0.7, 0.7)
    with pytest.raises(PreconditionError):
        strategy.support(2, 1)
    with pytest.raises(PreconditionError):
        BehavioralStrategy(player=3, m=1, n=1)


def test_companion_duels_are_antagonistic(make_spec):
    spec = make_spec(A=(2.0, 0.5), B=(1.0, 3.0))
    first = companion_zero_sum(spec, 1)
    second = companion_zero_sum(spec, 2)
    assert first.is_antagonistic and second.is_antagonistic
    assert (first.A1, first.B1) == (spec.A1, spec.B1)
    assert (second.A2, second.B2) == (spec.A2, spec.B2)
    with pytest.raises(PreconditionError):
        companion_zero_sum(spec, 0)


def test_maxmin_equals_value(make_spec):
    """Guaranteed values coincide with the equilibrium values."""
    spec = make_spec(m=3, n=2, A=(2.0, 0.5), B=(1.0, 3.0), P1="power:1.5")
    grid = _grid(spec)
    assert maxmin_value(spec, grid).max_difference(value_closed(spec, grid)) <= 1e-10
