"""Exception hierarchy for the duel engine."""

from typing import Optional, Tuple


class DuelError(Exception):
    """Base class for all errors raised by noisy_duels."""


class DomainError(DuelError, ValueError):
    """An argument lies outside the domain of the operation (e.g. t outside [0, 1])."""


class PreconditionError(DuelError, ValueError):
    """An operation was called with inputs that violate its preconditions."""


class SolverError(DuelError, RuntimeError):
    """A numerical routine could not produce a result."""

    def __init__(self, message: str, state: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.state = state


class BudgetExceededError(DuelError):
    """A request is larger than the configured computation budget."""


class ConfigError(DuelError, ValueError):
    """Malformed run configuration.

    Args:
        message: Human readable description
        line: 1-based line of the configuration file the problem is anchored to
    """

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line

    def __str__(self) -> str:
        text = super().__str__()
        if self.line is not None:
            return f"line {self.line}: {text}"
        return text
