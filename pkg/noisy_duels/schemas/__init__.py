"""Column layouts of the tabular artifacts written by the CLI.

Each schema maps a column name to its data type; the writer orders and
casts frames with them before emitting CSV or JSON.
"""

from typing import Dict

Schema = Dict[str, Dict[str, str]]

DTYPES = {"bigint": "int64", "double": "float64", "text": "object", "bool": "bool"}


def grid_schema(n: int) -> Schema:
    """Timing grid as a matrix: one row per mu, one column per nu."""
    schema: Schema = {"mu": {"data_type": "bigint"}}
    schema.update({f"nu_{nu}": {"data_type": "double"} for nu in range(1, n + 1)})
    return schema


value_schema: Schema = {
    "mu": {"data_type": "bigint"},
    "nu": {"data_type": "bigint"},
    "v1": {"data_type": "double"},
    "v2": {"data_type": "double"},
}

strategy_schema: Schema = {
    "mu": {"data_type": "bigint"},
    "nu": {"data_type": "bigint"},
    "t": {"data_type": "double"},
    "delta": {"data_type": "double"},
    "lo": {"data_type": "double"},
    "hi": {"data_type": "double"},
}

payoff_schema: Schema = {
    "K1": {"data_type": "double"},
    "K2": {"data_type": "double"},
    "Q0": {"data_type": "double"},
    "Q1": {"data_type": "double"},
    "Q2": {"data_type": "double"},
    "Q3": {"data_type": "double"},
}


def play_schema(m: int, n: int) -> Schema:
    """Simulated plays: one row per sample with its moments and payoffs."""
    schema: Schema = {"sample": {"data_type": "bigint"}}
    schema.update({f"tau_{i}": {"data_type": "double"} for i in range(1, m + 1)})
    schema.update({f"eta_{j}": {"data_type": "double"} for j in range(1, n + 1)})
    schema.update({"K1": {"data_type": "double"}, "K2": {"data_type": "double"}})
    return schema


__all__ = [
    "DTYPES",
    "Schema",
    "grid_schema",
    "payoff_schema",
    "play_schema",
    "strategy_schema",
    "value_schema",
]
