"""Pytest configuration for noisy-duels tests."""

import numpy as np
import pytest

from noisy_duels.accuracy import PowerProfile
from noisy_duels.models import DuelSpec
from noisy_duels.tgrid import solve_grid
from noisy_duels.verify import Budgets


@pytest.fixture
def linear():
    """Linear accuracy P(t) = t."""
    return PowerProfile(exponent=1.0)


@pytest.fixture
def make_spec():
    """Factory for duels; unit payoffs and linear accuracies by default."""

    def _make(m=1, n=1, A=(1.0, 1.0), B=(1.0, 1.0), P1="linear", P2="linear"):
        return DuelSpec(m=m, n=n, A=A, B=B, P1=P1, P2=P2)

    return _make


@pytest.fixture
def unit_spec(make_spec):
    """Symmetric linear duel with one unit each and A = B = (1, 1)."""
    return make_spec()


@pytest.fixture
def linear_grid(linear):
    """Timing grid of the linear symmetric duel up to (4, 4)."""
    return solve_grid(linear, linear, 4, 4)


@pytest.fixture
def small_budgets():
    """Verification budgets small enough for the regular test run."""
    return Budgets(samples=20_000, grid_points=400)


@pytest.fixture
def random_specs(make_spec):
    """Ten reproducible random duels with power accuracies."""
    rng = np.random.default_rng(7)
    specs = []
    for _ in range(10):
        A = tuple(float(x) for x in rng.uniform(0.5, 3.0, size=2))
        B = tuple(float(x) for x in rng.uniform(0.5, 3.0, size=2))
        k1, k2 = (float(x) for x in rng.uniform(0.5, 3.0, size=2))
        specs.append(make_spec(m=5, n=5, A=A, B=B, P1=f"power:{k1!r}", P2=f"power:{k2!r}"))
    return specs
