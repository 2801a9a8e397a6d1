from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from config.constants import EXIT_CONFIG
from scenario.config import load_scenario
from scenario.report import RunReport, Status
from scenario.workflow import ScenarioWorkflow
from utils.errors import ScenarioError
from utils.logging import logger

app = typer.Typer(add_completion=False, help="Construct and verify SUSY QM objects for complex 1D potentials.")
console = Console()

STATUS_STYLE = {Status.PASS: "green", Status.FAIL: "red", Status.INCONCLUSIVE: "yellow"}


def _flag_overrides(tol: Optional[float], seed_x: Optional[float], jobs: Optional[int],
                    out: Optional[Path]) -> List[str]:
    overrides = []
    if tol is not None:
        overrides.append(f"tolerances.ode={tol!r}")
    if seed_x is not None:
        overrides.append(f"seed_x={seed_x!r}")
    if jobs is not None:
        overrides.append(f"jobs={jobs}")
    if out is not None:
        overrides.append(f"output_dir={out.as_posix()}")
    return overrides


def print_summary(report: RunReport) -> None:
    table = Table(title=f"{report.scenario}: {report.seconds:.1f}s")
    table.add_column("task")
    table.add_column("unit")
    table.add_column("status")
    table.add_column("anchor")
    table.add_column("detail", overflow="fold")
    for outcome in report.outcomes:
        style = STATUS_STYLE[outcome.status]
        table.add_row(outcome.task, outcome.unit, f"[{style}]{outcome.status.value}[/{style}]",
                      outcome.anchor, outcome.detail)
    console.print(table)
    counts = report.counts()
    console.print(", ".join(f"{n} {name}" for name, n in counts.items()) + f" -> exit {report.exit_code}")


@app.command()
def run(
    scenario: Path = typer.Argument(..., help="YAML scenario file"),
    set_: List[str] = typer.Option([], "--set", help="Override a scenario key, e.g. --set darboux.lambda=-1"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
    tol: Optional[float] = typer.Option(None, "--tol", help="ODE tolerance"),
    seed_x: Optional[float] = typer.Option(None, "--seed-x", help="Seed abscissa for zero modes"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Parallel (lambda, direction) units"),
):
    """Run every task of SCENARIO and write its reports."""
    try:
        parsed = load_scenario(scenario, list(set_) + _flag_overrides(tol, seed_x, jobs, out))
    except (ScenarioError, ValidationError) as e:
        logger.error(f"Invalid scenario {scenario}: {e}")
        console.print(f"[red]invalid scenario {scenario}[/red]\n{e}")
        raise typer.Exit(code=EXIT_CONFIG)
    report = ScenarioWorkflow().run(parsed, label=scenario.stem)
    print_summary(report)
    raise typer.Exit(code=report.exit_code)


@app.callback()
def main():
    """susyqm command line."""


if __name__ == "__main__":
    app()
