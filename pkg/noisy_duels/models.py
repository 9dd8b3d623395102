"""Core data model of a nonzero-sum noisy duel with discrete firing."""

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from noisy_duels.accuracy import AccuracyProfile, coerce_profile
from noisy_duels.errors import PreconditionError

# (mu, nu): current resources of Player I and Player II
State = Tuple[int, int]


class DuelSpec(BaseModel):
    """Resources, profit vector A, loss vector B and accuracy profiles of a duel."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m: int
    n: int
    A: Tuple[float, float]
    B: Tuple[float, float]
    P1: AccuracyProfile
    P2: AccuracyProfile

    @field_validator("P1", "P2", mode="before")
    @classmethod
    def _coerce_profile(cls, value: Any) -> AccuracyProfile:
        return coerce_profile(value)

    @field_validator("m", "n")
    @classmethod
    def _check_resources(cls, value: int) -> int:
        if value < 0:
            raise ValueError("resource counts must be nonnegative")
        return value

    @model_validator(mode="after")
    def _check_payoff_constraint(self) -> "DuelSpec":
        for j in (0, 1):
            a, b = self.A[j], self.B[j]
            if a < 0 or b < 0 or a + b <= 0:
                raise ValueError(
                    f"player {j + 1}: need A >= 0, B >= 0 and A + B > 0, got A={a!r}, B={b!r}"
                )
        return self

    @property
    def A1(self) -> float:
        return self.A[0]

    @property
    def A2(self) -> float:
        return self.A[1]

    @property
    def B1(self) -> float:
        return self.B[0]

    @property
    def B2(self) -> float:
        return self.B[1]

    @property
    def is_antagonistic(self) -> bool:
        """Profit of each player equals the loss of the other (zero-sum duel)."""
        return self.A1 == self.B2 and self.A2 == self.B1

    def with_resources(self, m: int, n: int) -> "DuelSpec":
        """Same duel with other resource counts."""
        return self.model_copy(update={"m": m, "n": n})

    def with_payoffs(self, A: Sequence[float], B: Sequence[float]) -> "DuelSpec":
        """Same duel with other profit and loss vectors (re-validated)."""
        return DuelSpec(m=self.m, n=self.n, A=tuple(A), B=tuple(B), P1=self.P1, P2=self.P2)

    def describe(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "n": self.n,
            "A": list(self.A),
            "B": list(self.B),
            "profile1": self.P1.label(),
            "profile2": self.P2.label(),
        }


@dataclass(frozen=True)
class Play:
    """Realized action moments of both players.

    `tau[i - 1]` is tau_i, the moment Player I acts when i units remain, so
    `tau[-1]` is the first action and `tau[0]` the last; both vectors are
    nonincreasing.
    """

    tau: Tuple[float, ...]
    eta: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(float(x) for x in self.tau))
        object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))

    @property
    def m(self) -> int:
        return len(self.tau)

    @property
    def n(self) -> int:
        return len(self.eta)

    def ordering_ok(self) -> bool:
        return all(_ordered(v) for v in (self.tau, self.eta))

    def check(self, spec: "DuelSpec") -> None:
        """Raise PreconditionError unless the play fits `spec` and is ordered."""
        if (self.m, self.n) != (spec.m, spec.n):
            raise PreconditionError(
                f"play has dimensions ({self.m}, {self.n}), duel has ({spec.m}, {spec.n})"
            )
        if not self.ordering_ok():
            raise PreconditionError(f"action moments must be nonincreasing in [0, 1]: {self}")

    def to_dict(self) -> Dict[str, Any]:
        return {"tau": list(self.tau), "eta": list(self.eta)}


def _ordered(times: Tuple[float, ...]) -> bool:
    if any(not 0.0 <= x <= 1.0 for x in times):
        return False
    return all(later <= earlier for earlier, later in zip(times, times[1:]))


@dataclass(frozen=True)
class PayoffVector:
    """Expected payoffs (K1, K2) of a play or a strategy pair."""

    K1: float
    K2: float

    def as_tuple(self) -> Tuple[float, float]:
        return (self.K1, self.K2)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of: no success (Q0), Player I succeeds (Q1), Player II
    succeeds (Q2), both succeed simultaneously (Q3)."""

    Q0: float
    Q1: float
    Q2: float
    Q3: float

    @property
    def total(self) -> float:
        return self.Q0 + self.Q1 + self.Q2 + self.Q3
