"""Run configuration: YAML file, DUEL_* environment variables and CLI overrides.

Precedence is flags > YAML file > environment > defaults. Problems found in a
configuration file are reported with the line of the offending key.
"""

from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

import yaml
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from noisy_duels.accuracy import AccuracyProfile, coerce_profile
from noisy_duels.errors import ConfigError, DuelError
from noisy_duels.models import DuelSpec
from noisy_duels.verify import Budgets


class RunConfig(BaseSettings):
    """Every parameter of one CLI run."""

    model_config = SettingsConfigDict(env_prefix="DUEL_", env_file=".env", extra="ignore")

    m: int = Field(1, ge=0)
    n: int = Field(1, ge=0)
    A: Tuple[float, float] = (1.0, 1.0)
    B: Tuple[float, float] = (1.0, 1.0)
    profile1: Any = "linear"
    profile2: Any = "linear"
    tol: float = Field(1e-12, gt=0.0)
    epsilon: float = Field(0.05, gt=0.0)
    samples: int = Field(100_000, ge=2)
    grid_points: int = Field(2000, ge=2)
    quadrature_nodes: int = Field(8, ge=1)
    resolution: int = Field(50, ge=10)
    seed: int = 20240601
    format: Literal["csv", "json"] = "csv"
    out: Optional[Path] = None
    max_resources: int = Field(3, ge=1)
    max_pareto_resources: int = Field(4, ge=1)

    @field_validator("profile1", "profile2")
    @classmethod
    def _parse_profile(cls, value: Any) -> AccuracyProfile:
        try:
            return coerce_profile(value)
        except DuelError as exc:
            raise ValueError(str(exc)) from exc

    def to_spec(self) -> DuelSpec:
        """The duel described by this configuration."""
        try:
            return DuelSpec(
                m=self.m, n=self.n, A=self.A, B=self.B, P1=self.profile1, P2=self.profile2
            )
        except ValidationError as exc:
            raise ConfigError(_first_error(exc)) from exc

    def budgets(self) -> Budgets:
        return Budgets(
            samples=self.samples,
            grid_points=self.grid_points,
            seed=self.seed,
            nodes=self.quadrature_nodes,
            max_resources=self.max_resources,
            tol=self.tol,
        )

    def describe(self) -> Dict[str, Any]:
        data = self.model_dump(mode="json", exclude={"profile1", "profile2"})
        data["profile1"] = self.profile1.label()
        data["profile2"] = self.profile2.label()
        return data


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    where = ".".join(str(part) for part in error.get("loc", ()))
    return f"{where}: {error.get('msg')}" if where else str(error.get("msg"))


def _key_lines(text: str) -> Dict[str, int]:
    """1-based line of every top-level key of a YAML mapping."""
    node = yaml.compose(text)
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {key.value: key.start_mark.line + 1 for key, _ in node.value}


def read_config_file(path: Path) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """Parse a YAML run configuration into a dict and the line of each key.

    Raises:
        ConfigError: unreadable file, YAML syntax error, non-mapping document or unknown key
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"invalid YAML: {problem}", line=line) from exc
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of keys to values", line=1)
    unknown = [key for key in data if key not in RunConfig.model_fields]
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown key {key!r}", line=lines.get(str(key)))
    return data, lines


def load_config(
    path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """Build the run configuration.

    Args:
        path: Optional YAML file
        overrides: Values given on the command line; None entries are ignored

    Raises:
        ConfigError: malformed file or invalid value, anchored to its line when known
    """
    data: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    if path is not None:
        data, lines = read_config_file(path)
    flags = {key: value for key, value in (overrides or {}).items() if value is not None}
    merged = {**data, **flags}
    try:
        config = RunConfig(**merged)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = error.get("loc", ())
        key = str(loc[0]) if loc else ""
        line = lines.get(key) if key not in flags else None
        raise ConfigError(_first_error(exc), line=line) from exc
    config.to_spec()
    return config
