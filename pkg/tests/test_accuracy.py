"""Tests for accuracy profiles."""

import numpy as np
import pytest

from noisy_duels.accuracy import (
    PiecewiseLinearProfile,
    PowerProfile,
    TabulatedProfile,
    coerce_profile,
    inverse,
    parse_profile,
    require_valid,
    validate,
)
from noisy_duels.errors import DomainError, PreconditionError


@pytest.mark.parametrize(
    "text, expected",
    [
        ("linear", PowerProfile(exponent=1.0)),
        ("power:2", PowerProfile(exponent=2.0)),
        ("piecewise:0,0;0.5,0.8;1,1", PiecewiseLinearProfile(points=((0, 0), (0.5, 0.8), (1, 1)))),
        ("tabulated:0,0.3,1", TabulatedProfile(values=(0.0, 0.3, 1.0))),
    ],
)
def test_parse_profile(text, expected):
    """Compact forms build the matching profile."""
    assert parse_profile(text) == expected


def test_label_parses_back():
    """label() is the inverse of parse_profile."""
    for text in ("power:2.5", "piecewise:0,0;0.25,0.5;1,1", "tabulated:0,0.1,0.7,1"):
        profile = parse_profile(text)
        assert parse_profile(profile.label()) == profile


def test_parse_profile_rejects_garbage():
    """Unknown kinds and malformed parameters are precondition errors."""
    with pytest.raises(PreconditionError):
        parse_profile("cubic:3")
    with pytest.raises(PreconditionError):
        parse_profile("power:abc")
    with pytest.raises(PreconditionError):
        parse_profile("power:0")


def test_evaluate_scalar_and_array():
    """evaluate keeps the shape of its argument."""
    profile = parse_profile("power:2")
    assert profile.evaluate(0.5) == pytest.approx(0.25)
    assert isinstance(profile.evaluate(0.5), float)
    np.testing.assert_allclose(profile.evaluate(np.array([0.0, 0.5, 1.0])), [0.0, 0.25, 1.0])
    assert profile(0.5) == pytest.approx(0.25)


def test_piecewise_and_tabulated_interpolate():
    profile = parse_profile("piecewise:0,0;0.5,0.8;1,1")
    assert profile.evaluate(0.25) == pytest.approx(0.4)
    assert profile.evaluate(0.75) == pytest.approx(0.9)
    table = parse_profile("tabulated:0,0.2,0.6,1")
    assert table.evaluate(0.5) == pytest.approx(0.4)


@pytest.mark.parametrize("t", [-0.1, 1.1, float("nan")])
def test_evaluate_outside_domain(t, linear):
    """Times outside [0, 1] raise DomainError."""
    with pytest.raises(DomainError):
        linear.evaluate(t)
    with pytest.raises(DomainError):
        linear.evaluate(np.array([0.5, t]))


def test_validate_accepts_standard_profiles():
    for text in ("linear", "power:0.5", "power:3", "piecewise:0,0;0.5,0.8;1,1"):
        report = validate(parse_profile(text))
        assert report.passed, report.failures
        assert report.failures == []


@pytest.mark.parametrize("text", ["power:100", "power:400"])
def test_validate_accepts_steep_power_profiles(text):
    """t**k underflows to 0 near t = 0 but is still strictly increasing."""
    profile = parse_profile(text)
    assert profile.evaluate(1e-4) == 0.0
    report = validate(profile)
    assert report.passed, report.failures
    require_valid(profile)


def test_validate_flags_each_invariant():
    """Each broken invariant is reported on its own."""
    flat = validate(parse_profile("tabulated:0,0.5,0.5,1"))
    assert not flat.passed
    assert not flat.strictly_increasing
    assert flat.boundary_zero and flat.boundary_one

    lifted = validate(parse_profile("piecewise:0,0.1;1,1"))
    assert not lifted.boundary_zero

    short = validate(parse_profile("piecewise:0,0;1,0.9"))
    assert not short.boundary_one


def test_require_valid_raises_on_invalid(linear):
    require_valid(linear)
    with pytest.raises(PreconditionError, match="not valid"):
        require_valid(linear, parse_profile("tabulated:0,0.5,0.4,1"))


def test_inverse():
    """inverse solves P(t) = p."""
    assert inverse(parse_profile("linear"), 0.5) == pytest.approx(0.5, abs=1e-12)
    assert inverse(parse_profile("power:2"), 0.25) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        inverse(parse_profile("linear"), 1.5)


def test_coerce_profile_accepts_records():
    """Configuration records {kind, parameters} and instances are accepted."""
    record = {"kind": "power", "parameters": {"exponent": 2}}
    assert coerce_profile(record) == PowerProfile(exponent=2.0)
    assert coerce_profile({"kind": "linear", "parameters": {}}) == PowerProfile(exponent=1.0)
    instance = PowerProfile(exponent=3.0)
    assert coerce_profile(instance) is instance
    with pytest.raises(PreconditionError):
        coerce_profile(42)
