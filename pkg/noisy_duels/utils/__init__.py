"""Utility functions for the duel engine."""

from noisy_duels.utils.helpers import (
    InterceptHandler,
    load_env_vars,
    setup_logger,
    write_json,
    write_table,
)

__all__ = [
    "InterceptHandler",
    "load_env_vars",
    "setup_logger",
    "write_json",
    "write_table",
]
