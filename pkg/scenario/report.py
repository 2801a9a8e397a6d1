"""Task outcomes, the run report and plot-ready CSV files."""
import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from functools import singledispatch
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from config.constants import EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_OK
from darboux.first_order import TransformResult
from jordan.index import IndexReport
from quadrature.functionals import Lemma6Report
from solutions.asymptotics import AsymptoticModel, asymptotic_deviation
from solutions.chains import JordanChain
from solutions.formal import FormalSolution
from utils.formatting import write_csv, write_json


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass
class TaskOutcome:
    task: str
    unit: str
    status: Status
    anchor: str = ""
    detail: str = ""
    artifacts: List[str] = field(default_factory=list)
    seconds: float = 0.0

    def manifest(self) -> dict:
        """Everything except the wall time, which would break byte-identical reruns."""
        return {"task": self.task, "unit": self.unit, "status": self.status.value, "anchor": self.anchor,
                "detail": self.detail, "artifacts": self.artifacts}


@dataclass
class RunReport:
    scenario: str
    outcomes: List[TaskOutcome] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def exit_code(self) -> int:
        statuses = {o.status for o in self.outcomes}
        if Status.FAIL in statuses:
            return EXIT_FAILURE
        if Status.INCONCLUSIVE in statuses:
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def counts(self) -> Dict[str, int]:
        return {s.value: sum(1 for o in self.outcomes if o.status is s) for s in Status}

    def manifest(self) -> dict:
        return {"scenario": self.scenario, "exit_code": self.exit_code, "counts": self.counts(),
                "tasks": [o.manifest() for o in self.outcomes]}

    def write(self, out_dir: Path) -> Path:
        return write_json(self.manifest(), Path(out_dir) / "run_report.json")


def write_report(report: Any, path: Path, exclude: tuple = ()) -> Path:
    """JSON of a dataclass report, without the named (bulky or non-serializable) fields."""
    if dataclasses.is_dataclass(report):
        data = {f.name: getattr(report, f.name) for f in dataclasses.fields(report) if f.name not in exclude}
    else:
        data = report
    return write_json(data, path)


@singledispatch
def emit_plotdata(artifact: Any, path: Path, **extra) -> Path:
    raise TypeError(f"no plot data layout for {type(artifact).__name__}")


@emit_plotdata.register
def _(artifact: FormalSolution, path: Path, model: Optional[AsymptoticModel] = None) -> Path:
    """x, Re/Im psi and, with a model, |psi / asym - 1| on the trusted part of the grid."""
    x = artifact.traj.grid.abscissas
    columns = {"x": x, "psi": artifact.traj.psi}
    if model is not None:
        reach = artifact.reach[1] if artifact.direction.sign > 0 else artifact.reach[0]
        inside = (np.abs(x) >= model.ctx.R1) & (np.abs(x) <= reach) & (np.sign(x) == artifact.direction.sign)
        ratio = np.full(x.shape, np.nan)
        ratio[inside] = asymptotic_deviation(artifact, model, x[inside])[0]
        columns["|psi/asym - 1|"] = ratio
    return write_csv(columns, path)


@emit_plotdata.register
def _(artifact: JordanChain, path: Path) -> Path:
    """One column pair per member on the zero mode's grid."""
    x = artifact.members[0].traj.grid.abscissas
    columns: Dict[str, Any] = {"x": x}
    lo, hi = min(m.interval[0] for m in artifact.members), max(m.interval[1] for m in artifact.members)
    for member in artifact.members:
        inside = (x >= max(lo, member.interval[0])) & (x <= min(hi, member.interval[1]))
        values = np.full(x.shape, np.nan + 0j)
        values[inside] = np.asarray(member(x[inside])[0])
        columns[f"phi_{member.order}"] = values
    return write_csv(columns, path)


@emit_plotdata.register
def _(artifact: TransformResult, path: Path, n: int = 401) -> Path:
    return write_csv(artifact.samples(n), path)


@emit_plotdata.register
def _(artifact: IndexReport, path: Path) -> Path:
    return artifact.to_csv(path)


@emit_plotdata.register
def _(artifact: Lemma6Report, path: Path) -> Path:
    return write_csv(artifact.samples, path)
