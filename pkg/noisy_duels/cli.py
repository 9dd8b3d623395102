"""Command-line interface for noisy duel computations."""

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from noisy_duels.config import RunConfig, load_config
from noisy_duels.equilibrium import epsilon_strategy, value_closed, value_recurrence
from noisy_duels.errors import ConfigError, DuelError, PreconditionError
from noisy_duels.models import Play
from noisy_duels.pareto import SUITES, check_pareto_theorems
from noisy_duels.payoff import check_consistency, evaluate_batch
from noisy_duels.sampling import expected_payoff, simulate_plays
from noisy_duels.schemas import grid_schema, payoff_schema, play_schema, strategy_schema
from noisy_duels.schemas import value_schema
from noisy_duels.tgrid import corridor_holds, residual, solve_grid
from noisy_duels.utils import load_env_vars, setup_logger, write_json, write_table
from noisy_duels.verify import verify_epsilon_equilibrium, verify_maxmin

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

app = typer.Typer(help="Equilibrium timing, payoffs and Pareto analysis of noisy duels")
console = Console(stderr=True)

ConfigOption = typer.Option(None, "--config", "-c", help="YAML run configuration")
MOption = typer.Option(None, "--m", help="Resources of Player I")
NOption = typer.Option(None, "--n", help="Resources of Player II")
A1Option = typer.Option(None, "--A1", help="Profit of Player I")
A2Option = typer.Option(None, "--A2", help="Profit of Player II")
B1Option = typer.Option(None, "--B1", help="Loss of Player I")
B2Option = typer.Option(None, "--B2", help="Loss of Player II")
Profile1Option = typer.Option(
    None, "--profile1", help="Accuracy of Player I (linear, power:K, piecewise:..., tabulated:...)"
)
Profile2Option = typer.Option(None, "--profile2", help="Accuracy of Player II")
TolOption = typer.Option(None, "--tol", help="Residual tolerance of the timing grid")
FormatOption = typer.Option(None, "--format", "-f", help="Output format (csv/json)")
OutOption = typer.Option(None, "--out", "-o", help="Output file (stdout when omitted)")
SeedOption = typer.Option(None, "--seed", help="Master random seed")


@app.callback()
def main(
    log_level: str = typer.Option("WARNING", "--log-level", help="Log level (DEBUG/INFO/...)"),
    log_file: Optional[str] = typer.Option(None, "--log-file", help="Also log to this file"),
    env_file: Optional[str] = typer.Option(None, "--env-file", help="Load DUEL_* from this file"),
):
    """Noisy duels with discrete firing moments."""
    setup_logger(log_level, log_file)
    load_env_vars(env_file)


@contextmanager
def _input_errors() -> Iterator[None]:
    """Turn library errors into exit code 2 with a one-line message."""
    try:
        yield
    except ConfigError as exc:
        console.print(f"configuration error: {exc}", style="bold red", markup=False)
        raise typer.Exit(code=EXIT_INPUT_ERROR)
    except DuelError as exc:
        console.print(f"error: {exc}", style="bold red", markup=False)
        raise typer.Exit(code=EXIT_INPUT_ERROR)


def _load(
    config: Optional[Path], payoffs: Tuple[Optional[float], ...], **flags: Any
) -> RunConfig:
    """Resolve the run configuration; --A1/--A2/--B1/--B2 override single components."""
    cfg = load_config(config, flags)
    if all(x is None for x in payoffs):
        return cfg
    a1, a2, b1, b2 = payoffs
    flags["A"] = (cfg.A[0] if a1 is None else a1, cfg.A[1] if a2 is None else a2)
    flags["B"] = (cfg.B[0] if b1 is None else b1, cfg.B[1] if b2 is None else b2)
    return load_config(config, flags)


def _summary(title: str, rows: Dict[str, Any]) -> None:
    table = Table(title=title)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right", style="green")
    for key, value in rows.items():
        text = f"{value:.12g}" if isinstance(value, float) else str(value)
        table.add_row(key, text)
    console.print(table)


def _finish(passed: bool) -> None:
    if not passed:
        console.print("[bold red]Checks failed[/bold red]")
        raise typer.Exit(code=EXIT_CHECK_FAILED)


def _parse_times(text: Optional[str], name: str) -> Tuple[float, ...]:
    if text is None or text.strip() == "":
        return ()
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise PreconditionError(f"--{name} expects comma-separated numbers, got {text!r}") from exc


def _read_plays(path: Path, m: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Plays from a CSV with columns tau_1..tau_m and eta_1..eta_n."""
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as exc:
        raise PreconditionError(f"cannot read plays from {path}: {exc}") from exc
    tau_cols = [f"tau_{i}" for i in range(1, m + 1)]
    eta_cols = [f"eta_{j}" for j in range(1, n + 1)]
    missing = [c for c in tau_cols + eta_cols if c not in frame.columns]
    if missing:
        raise PreconditionError(f"play file {path} lacks columns {missing}")
    taus = frame[tau_cols].to_numpy(dtype=float).reshape(len(frame), m)
    etas = frame[eta_cols].to_numpy(dtype=float).reshape(len(frame), n)
    return taus, etas


@app.command()
def grid(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    tol: Optional[float] = TolOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Solve the equilibrium timing grid t_{mu,nu}."""
    with _input_errors():
        cfg = _load(
            config, (None,) * 4, m=m, n=n, profile1=profile1, profile2=profile2,
            tol=tol, format=fmt, out=out,
        )
        spec = cfg.to_spec()
        solved = solve_grid(spec.P1, spec.P2, spec.m, spec.n, cfg.tol)
    frame = solved.to_frame().reset_index()
    write_table(frame, grid_schema(solved.n), cfg.format, cfg.out)
    _summary(
        f"Timing grid ({solved.m}, {solved.n})",
        {
            "t_11": solved.at(1, 1),
            f"t_{solved.m}{solved.n}": solved.at(solved.m, solved.n),
            "max residual": residual(solved, spec.P1, spec.P2),
            "corridor holds": corridor_holds(solved),
        },
    )


@app.command()
def value(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    a1: Optional[float] = A1Option,
    a2: Optional[float] = A2Option,
    b1: Optional[float] = B1Option,
    b2: Optional[float] = B2Option,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    tol: Optional[float] = TolOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Emit the equilibrium value table (v1, v2) for every state."""
    with _input_errors():
        cfg = _load(
            config, (a1, a2, b1, b2), m=m, n=n, profile1=profile1, profile2=profile2,
            tol=tol, format=fmt, out=out,
        )
        spec = cfg.to_spec()
        solved = solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1), cfg.tol)
        closed = value_closed(spec, solved)
        recurrence = value_recurrence(spec, solved)
    write_table(closed.to_frame(), value_schema, cfg.format, cfg.out)
    v1, v2 = closed.at(spec.m, spec.n)
    _summary(
        f"Values at ({spec.m}, {spec.n})",
        {"v1": v1, "v2": v2, "recurrence gap": closed.max_difference(recurrence)},
    )


@app.command()
def payoff(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    a1: Optional[float] = A1Option,
    a2: Optional[float] = A2Option,
    b1: Optional[float] = B1Option,
    b2: Optional[float] = B2Option,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    tau: Optional[str] = typer.Option(None, "--tau", help="tau_1,...,tau_m (last action first)"),
    eta: Optional[str] = typer.Option(None, "--eta", help="eta_1,...,eta_n"),
    play_file: Optional[Path] = typer.Option(
        None, "--play-file", help="CSV of plays with columns tau_i, eta_j"
    ),
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Evaluate the expected payoffs and outcome probabilities of plays."""
    with _input_errors():
        cfg = _load(
            config, (a1, a2, b1, b2), m=m, n=n, profile1=profile1, profile2=profile2,
            format=fmt, out=out,
        )
        spec = cfg.to_spec()
        if play_file is not None:
            taus, etas = _read_plays(play_file, spec.m, spec.n)
            plays = [Play(tau=tuple(t), eta=tuple(e)) for t, e in zip(taus, etas)]
        else:
            plays = [Play(tau=_parse_times(tau, "tau"), eta=_parse_times(eta, "eta"))]
        reports = []
        for play in plays:
            play.check(spec)
            reports.append(check_consistency(spec, play))

    rows = [
        {"K1": r.payoff[0], "K2": r.payoff[1], **dict(zip(("Q0", "Q1", "Q2", "Q3"), r.outcome))}
        for r in reports
    ]
    if play_file is None and cfg.format == "json":
        write_json(rows[0], cfg.out)
    else:
        write_table(pd.DataFrame(rows), payoff_schema, cfg.format, cfg.out)
    consistent = all(r.passed for r in reports)
    _summary(
        "Payoff",
        {"plays": len(reports), "K1": rows[0]["K1"], "K2": rows[0]["K2"], "consistent": consistent},
    )
    _finish(consistent)


@app.command()
def strategy(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    a1: Optional[float] = A1Option,
    a2: Optional[float] = A2Option,
    b1: Optional[float] = B1Option,
    b2: Optional[float] = B2Option,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    epsilon: Optional[float] = typer.Option(None, "--epsilon", "-e", help="Admissible gain"),
    tol: Optional[float] = TolOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Emit the supports [t, t + delta] of the epsilon-equilibrium strategies."""
    with _input_errors():
        cfg = _load(
            config, (a1, a2, b1, b2), m=m, n=n, profile1=profile1, profile2=profile2,
            epsilon=epsilon, tol=tol, format=fmt, out=out,
        )
        spec = cfg.to_spec()
        solved = solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1), cfg.tol)
        x_eps, _, params = epsilon_strategy(spec, solved, cfg.epsilon)
    rows = []
    for mu, nu in sorted(x_eps.supports):
        lo, hi = x_eps.supports[(mu, nu)]
        rows.append(
            {
                "mu": mu,
                "nu": nu,
                "t": solved.at(mu, nu),
                "delta": params.at(mu, nu),
                "lo": lo,
                "hi": hi,
            }
        )
    frame = pd.DataFrame(rows, columns=list(strategy_schema))
    write_table(frame, strategy_schema, cfg.format, cfg.out)
    _summary(
        "epsilon-strategies",
        {"epsilon": params.epsilon, "lambda": params.lam, "states": len(rows)},
    )


@app.command()
def verify(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    a1: Optional[float] = A1Option,
    a2: Optional[float] = A2Option,
    b1: Optional[float] = B1Option,
    b2: Optional[float] = B2Option,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    epsilon: Optional[float] = typer.Option(None, "--epsilon", "-e", help="Admissible gain"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Monte Carlo samples"),
    grid_points: Optional[int] = typer.Option(
        None, "--grid-points", help="Time grid size of the best-response program"
    ),
    nodes: Optional[int] = typer.Option(None, "--nodes", help="Gauss-Legendre nodes"),
    method: str = typer.Option("monte-carlo", "--method", help="monte-carlo/quadrature"),
    maxmin: bool = typer.Option(False, "--maxmin", help="Verify the guaranteed values instead"),
    adversarial_control: bool = typer.Option(
        False, "--adversarial-control", help="Replace Player II by the t_11/2 plan (must fail)"
    ),
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
):
    """Verify the epsilon-equilibrium (or epsilon-maxmin) property; exit 1 on failure."""
    with _input_errors():
        cfg = _load(
            config, (a1, a2, b1, b2), m=m, n=n, profile1=profile1, profile2=profile2,
            epsilon=epsilon, samples=samples, grid_points=grid_points, quadrature_nodes=nodes,
            seed=seed, out=out,
        )
        spec = cfg.to_spec()
        budgets = cfg.budgets().model_copy(update={"method": method})
        if maxmin:
            report = verify_maxmin(spec, cfg.epsilon, budgets)
        else:
            report = verify_epsilon_equilibrium(spec, cfg.epsilon, budgets, adversarial_control)
    write_json(report.model_dump(mode="json"), cfg.out)
    rows: Dict[str, Any] = {"state": report.state, "epsilon": report.epsilon}
    for check in report.checks:
        rows[check.name] = f"{check.observed:.3e} <= {check.bound + check.slack:.3e}"
    rows["passed"] = report.passed
    _summary(f"{report.kind} verification", rows)
    _finish(report.passed)


@app.command()
def pareto(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    a1: Optional[float] = A1Option,
    a2: Optional[float] = A2Option,
    b1: Optional[float] = B1Option,
    b2: Optional[float] = B2Option,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    resolution: Optional[int] = typer.Option(
        None, "--resolution", help="Enumeration points per time coordinate"
    ),
    suite: Optional[List[str]] = typer.Option(
        None, "--suite", "-s", help=f"Suite to run, repeatable ({', '.join(SUITES)})"
    ),
    tol: Optional[float] = TolOption,
    out: Optional[Path] = OutOption,
):
    """Run the Pareto-optimality suites on the enumerated plays; exit 1 on failure."""
    with _input_errors():
        cfg = _load(
            config, (a1, a2, b1, b2), m=m, n=n, profile1=profile1, profile2=profile2,
            resolution=resolution, tol=tol, out=out,
        )
        spec = cfg.to_spec()
        solved = solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1), cfg.tol)
        report = check_pareto_theorems(
            spec, solved, cfg.resolution, suite or SUITES, cfg.max_pareto_resources
        )
    write_json(report.model_dump(mode="json"), cfg.out)
    rows: Dict[str, Any] = {"plays": report.enumerated, "plays in P'": report.prime_plays}
    for result in report.suites:
        rows[result.name] = "skipped" if not result.applicable else result.passed
    _summary(f"Pareto suites at ({spec.m}, {spec.n})", rows)
    _finish(report.passed)


@app.command()
def simulate(
    config: Optional[Path] = ConfigOption,
    m: Optional[int] = MOption,
    n: Optional[int] = NOption,
    a1: Optional[float] = A1Option,
    a2: Optional[float] = A2Option,
    b1: Optional[float] = B1Option,
    b2: Optional[float] = B2Option,
    profile1: Optional[str] = Profile1Option,
    profile2: Optional[str] = Profile2Option,
    epsilon: Optional[float] = typer.Option(None, "--epsilon", "-e", help="Admissible gain"),
    count: int = typer.Option(100, "--count", help="Number of plays to emit"),
    method: str = typer.Option(
        "monte-carlo", "--method", help="Estimator of the expected payoff (summary only)"
    ),
    samples: Optional[int] = typer.Option(None, "--samples", help="Monte Carlo samples"),
    nodes: Optional[int] = typer.Option(None, "--nodes", help="Gauss-Legendre nodes"),
    tol: Optional[float] = TolOption,
    seed: Optional[int] = SeedOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Sample plays of the epsilon-equilibrium strategies with their payoffs."""
    with _input_errors():
        cfg = _load(
            config, (a1, a2, b1, b2), m=m, n=n, profile1=profile1, profile2=profile2,
            epsilon=epsilon, samples=samples, quadrature_nodes=nodes, tol=tol, seed=seed,
            format=fmt, out=out,
        )
        spec = cfg.to_spec()
        solved = solve_grid(spec.P1, spec.P2, max(spec.m, 1), max(spec.n, 1), cfg.tol)
        x_eps, y_eps, _ = epsilon_strategy(spec, solved, cfg.epsilon)
        taus, etas = simulate_plays(spec, x_eps, y_eps, count, cfg.seed)
        estimate = expected_payoff(
            spec, x_eps, y_eps, method, cfg.samples, cfg.seed, cfg.quadrature_nodes
        )
        v1, v2 = value_closed(spec, solved).at(spec.m, spec.n)
    k1, k2 = evaluate_batch(spec, taus, etas)
    schema = play_schema(spec.m, spec.n)
    data = np.column_stack([np.arange(count), taus, etas, k1, k2])
    frame = pd.DataFrame(data, columns=list(schema))
    write_table(frame, schema, cfg.format, cfg.out)
    logger.info("Simulated {} plays at state ({}, {})", count, spec.m, spec.n)
    _summary(
        f"epsilon-strategies at ({spec.m}, {spec.n})",
        {
            "mean K1 of plays": float(np.mean(k1)),
            "mean K2 of plays": float(np.mean(k2)),
            f"K1 ({estimate.method})": estimate.k1,
            f"K2 ({estimate.method})": estimate.k2,
            "v1": v1,
            "v2": v2,
        },
    )


if __name__ == "__main__":
    app()
