"""Accuracy (effectiveness) profiles P(t) of the duelists.

A profile gives the probability that one unit of resource used at time t
succeeds. Profiles are immutable pydantic models; `evaluate` accepts a scalar
or a numpy array.
"""

from functools import lru_cache
from typing import Annotated, Any, Dict, List, Literal, Tuple, Union, overload

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

from noisy_duels.errors import DomainError, PreconditionError

DEFAULT_VALIDATION_POINTS = 10_000


class AccuracyProfile(BaseModel):
    """Base class for a continuous increasing success-probability function on [0, 1]."""

    model_config = ConfigDict(frozen=True)

    kind: str

    def _raw(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def knots(self) -> np.ndarray:
        """Points where the profile changes its analytic form (always includes 0 and 1)."""
        return np.array([0.0, 1.0])

    @overload
    def evaluate(self, t: float) -> float: ...

    @overload
    def evaluate(self, t: np.ndarray) -> np.ndarray: ...

    def evaluate(self, t):
        """Return P(t).

        Args:
            t: Time in [0, 1], scalar or array

        Returns:
            Success probability with the same shape as `t`

        Raises:
            DomainError: if any t lies outside [0, 1]
        """
        arr = np.asarray(t, dtype=float)
        if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
            raise DomainError(f"accuracy profile evaluated outside [0, 1]: {t!r}")
        values = self._raw(arr)
        if np.ndim(t) == 0:
            return float(values)
        return values

    __call__ = evaluate

    def log_evaluate(self, t: np.ndarray) -> np.ndarray:
        """log P(t), -inf where P(t) = 0. Used where P underflows near t = 0."""
        with np.errstate(divide="ignore"):
            return np.log(self.evaluate(np.asarray(t, dtype=float)))

    def label(self) -> str:
        """Compact textual form, inverse of `parse_profile`."""
        raise NotImplementedError


class PowerProfile(AccuracyProfile):
    """P(t) = t**k."""

    kind: Literal["power"] = "power"
    exponent: float = Field(1.0, gt=0.0)

    def _raw(self, t: np.ndarray) -> np.ndarray:
        return np.power(t, self.exponent)

    def log_evaluate(self, t: np.ndarray) -> np.ndarray:
        arr = np.asarray(t, dtype=float)
        self.evaluate(arr)  # raises DomainError outside [0, 1]
        with np.errstate(divide="ignore"):
            return self.exponent * np.log(arr)

    def label(self) -> str:
        return f"power:{self.exponent!r}"


class PiecewiseLinearProfile(AccuracyProfile):
    """Linear interpolation between (t, p) knots spanning [0, 1]."""

    kind: Literal["piecewise-linear"] = "piecewise-linear"
    points: Tuple[Tuple[float, float], ...]

    @field_validator("points")
    @classmethod
    def _check_points(cls, value):
        if len(value) < 2:
            raise ValueError("a piecewise-linear profile needs at least two knots")
        ts = [p[0] for p in value]
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise ValueError("knot times must start at 0 and end at 1")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("knot times must be strictly increasing")
        if any(not 0.0 <= p[1] <= 1.0 for p in value):
            raise ValueError("knot probabilities must lie in [0, 1]")
        return value

    def _raw(self, t: np.ndarray) -> np.ndarray:
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return np.interp(t, xs, ys)

    def knots(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    def label(self) -> str:
        return "piecewise:" + ";".join(f"{t!r},{p!r}" for t, p in self.points)


class TabulatedProfile(AccuracyProfile):
    """Samples p_k = P(k/K) on a uniform grid, interpolated linearly."""

    kind: Literal["tabulated"] = "tabulated"
    values: Tuple[float, ...]

    @field_validator("values")
    @classmethod
    def _check_values(cls, value):
        if len(value) < 2:
            raise ValueError("a tabulated profile needs at least two samples")
        if any(not 0.0 <= v <= 1.0 for v in value):
            raise ValueError("tabulated probabilities must lie in [0, 1]")
        return value

    def _raw(self, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.knots(), np.asarray(self.values))

    def knots(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.values))

    def label(self) -> str:
        return "tabulated:" + ",".join(repr(v) for v in self.values)


ProfileSpec = Annotated[
    Union[PowerProfile, PiecewiseLinearProfile, TabulatedProfile],
    Field(discriminator="kind"),
]
_profile_adapter: TypeAdapter = TypeAdapter(ProfileSpec)


class ValidationReport(BaseModel):
    """Outcome of `validate` for one profile."""

    profile: str
    grid_points: int
    boundary_zero: bool
    boundary_one: bool
    strictly_increasing: bool
    interior_open: bool
    failures: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(
            (self.boundary_zero, self.boundary_one, self.strictly_increasing, self.interior_open)
        )


def validate(profile: AccuracyProfile, points: int = DEFAULT_VALIDATION_POINTS) -> ValidationReport:
    """Check the profile invariants on a uniform grid plus the knot points.

    Args:
        profile: Profile to check
        points: Number of uniform grid points on [0, 1]

    Returns:
        Report with one flag per invariant
    """
    grid = np.union1d(np.linspace(0.0, 1.0, max(points, 2)), profile.knots())
    values = profile.evaluate(grid)
    logs = profile.log_evaluate(grid)
    failures: List[str] = []

    boundary_zero = values[0] == 0.0
    if not boundary_zero:
        failures.append(f"P(0) = {values[0]!r}, expected 0")
    boundary_one = values[-1] == 1.0
    if not boundary_one:
        failures.append(f"P(1) = {values[-1]!r}, expected 1")

    # log-space, so steep profiles that underflow near t = 0 still compare; nan is a failure
    with np.errstate(invalid="ignore"):
        steps = np.diff(logs)
    flat = np.flatnonzero(~(steps > 0.0))
    strictly_increasing = flat.size == 0
    if not strictly_increasing:
        i = int(flat[0])
        failures.append(
            f"not strictly increasing between t={grid[i]!r} and t={grid[i + 1]!r} "
            f"({flat.size} offending steps)"
        )

    inner = logs[1:-1]
    bad = np.flatnonzero(~(np.isfinite(inner) & (inner < 0.0)))
    interior_open = bad.size == 0
    if not interior_open:
        failures.append(f"P(t) not in (0, 1) at t={grid[1 + int(bad[0])]!r}")

    report = ValidationReport(
        profile=profile.label(),
        grid_points=int(grid.size),
        boundary_zero=bool(boundary_zero),
        boundary_one=bool(boundary_one),
        strictly_increasing=bool(strictly_increasing),
        interior_open=bool(interior_open),
        failures=failures,
    )
    if failures:
        logger.debug("Profile {} failed validation: {}", report.profile, "; ".join(failures))
    return report


@lru_cache(maxsize=128)
def _is_valid(profile: AccuracyProfile) -> bool:
    return validate(profile).passed


def require_valid(*profiles: AccuracyProfile) -> None:
    """Raise PreconditionError unless every profile passes `validate`."""
    for profile in profiles:
        if not _is_valid(profile):
            failures = "; ".join(validate(profile).failures)
            raise PreconditionError(f"profile {profile.label()} is not valid: {failures}")


def inverse(profile: AccuracyProfile, p: float, tol: float = 1e-14) -> float:
    """Return the t in [0, 1] with P(t) = p (bisection on the increasing profile)."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p!r} outside [0, 1]")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if profile.evaluate(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_profile(kind: str, parameters: Dict[str, Any]) -> AccuracyProfile:
    """Build a profile from a `{kind, parameters}` configuration record."""
    if kind == "linear":
        return PowerProfile(exponent=1.0)
    return _profile_adapter.validate_python({"kind": kind, **parameters})


def parse_profile(text: str) -> AccuracyProfile:
    """Parse the compact form used on the command line.

    Accepted forms: ``linear``, ``power:K``, ``piecewise:t0,p0;t1,p1;...``,
    ``tabulated:p0,p1,...``.
    """
    kind, _, params = text.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "linear":
            return PowerProfile(exponent=1.0)
        if kind == "power":
            return PowerProfile(exponent=float(params))
        if kind in ("piecewise", "piecewise-linear"):
            points = tuple(
                (float(t), float(p))
                for t, p in (pair.split(",") for pair in params.split(";") if pair.strip())
            )
            return PiecewiseLinearProfile(points=points)
        if kind == "tabulated":
            return TabulatedProfile(values=tuple(float(v) for v in params.split(",")))
    except ValueError as exc:
        raise PreconditionError(f"cannot parse profile {text!r}: {exc}") from exc
    raise PreconditionError(f"unknown profile kind {kind!r} in {text!r}")


def coerce_profile(value: Any) -> AccuracyProfile:
    """Accept a profile instance, a compact string or a `{kind, parameters}` mapping."""
    if isinstance(value, AccuracyProfile):
        return value
    if isinstance(value, str):
        return parse_profile(value)
    if isinstance(value, dict):
        if "parameters" in value:
            return build_profile(str(value["kind"]), dict(value.get("parameters") or {}))
        return _profile_adapter.validate_python(value)
    raise PreconditionError(f"cannot interpret {value!r} as an accuracy profile")
