from pathlib import Path

import orjson
import pandas as pd
import pytest
from joblib import Parallel, delayed
from pydantic import ValidationError
from typer.testing import CliRunner

from app import app
from config.constants import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, TASK_IDS
from scenario.config import Scenario, apply_overrides, load_scenario
from scenario.report import RunReport, Status, TaskOutcome, emit_plotdata
from scenario.tasks import RunContext, zero_modes
from scenario.workflow import ScenarioWorkflow
from utils.errors import ScenarioError

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

runner = CliRunner()


def write_scenario(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "scenario.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_bundled_scenarios_load():
    for path in sorted(SCENARIOS.glob("*.yaml")):
        scenario = load_scenario(path)
        assert scenario.tasks


def test_lambdas_accept_grammar_text():
    scenario = load_scenario(SCENARIOS / "one_sided.yaml")
    assert scenario.lambdas == [1j]
    assert scenario.directions == ["up"]


def test_tasks_run_in_dependency_order():
    scenario = Scenario(potential="x^2", R0=1.0, eps=0.5, tasks=["darboux", "validate", "solve"])
    assert scenario.ordered_tasks() == ["validate", "solve", "darboux"]
    assert all(t in TASK_IDS for t in scenario.ordered_tasks())


def test_overrides_reach_nested_keys():
    raw = apply_overrides({"potential": "x^2"}, ["tolerances.ode=1e-9", "darboux.lambda=-1", "jobs=2"])
    assert raw["tolerances"]["ode"] == 1e-9
    assert raw["darboux"]["lambda"] == -1
    assert raw["jobs"] == 2


def test_malformed_override_is_refused():
    with pytest.raises(ScenarioError):
        apply_overrides({}, ["no-equals-sign"])
    with pytest.raises(ScenarioError):
        apply_overrides({"potential": "x^2"}, ["potential.degree=2"])


def test_command_line_flags_override_the_file():
    scenario = load_scenario(SCENARIOS / "oscillator_darboux.yaml", ["tolerances.ode=1e-8", "seed_x=5.0"])
    assert scenario.tolerances.ode == 1e-8
    assert scenario.seed_x == 5.0


@pytest.mark.parametrize("body", [
    "potential: x^2\nR0: 1\neps: 0.5\ntasks: [frobnicate]\n",
    "potential: x^2\nR0: 1\neps: 0.5\nXmax: 0.5\ntasks: [validate]\n",
    "potential: x^2\nR0: 1\neps: 0.5\ntasks: [darboux]\ndarboux:\n  phi: exp(x^2/2)\n",
    "potential: x^2\nR0: 1\neps: 0.5\nlambdas: [\"1+\"]\ntasks: [solve]\n",
    "potential: x^2 +\nR0: 1\neps: 0.5\ntasks: [validate]\n",
    "potential: foo(x)\nR0: 1\neps: 0.5\ntasks: [validate]\n",
])
def test_invalid_scenarios_are_refused(tmp_path, body):
    with pytest.raises(ValidationError):
        load_scenario(write_scenario(tmp_path, body))


def test_non_mapping_scenario_is_refused(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(write_scenario(tmp_path, "- x^2\n"))


def test_exit_code_prefers_failure():
    report = RunReport("s", [TaskOutcome("validate", "-", Status.PASS),
                             TaskOutcome("solve", "-1/up", Status.INCONCLUSIVE)])
    assert report.exit_code == 3
    report.outcomes.append(TaskOutcome("darboux", "-1", Status.FAIL))
    assert report.exit_code == EXIT_FAILURE
    assert "seconds" not in report.manifest()["tasks"][0]


def test_unknown_artifact_has_no_plot_layout(tmp_path):
    with pytest.raises(TypeError):
        emit_plotdata(object(), tmp_path / "x.csv")


def test_oscillator_darboux_run_passes(tmp_path):
    result = runner.invoke(app, ["run", str(SCENARIOS / "oscillator_darboux.yaml"), "--out", str(tmp_path)])
    assert result.exit_code == EXIT_OK, result.output
    report = orjson.loads((tmp_path / "run_report.json").read_bytes())
    assert report["counts"]["pass"] == len(report["tasks"])
    assert [t["task"] for t in report["tasks"]] == ["validate", "solve", "solve", "darboux"]
    summary = orjson.loads((tmp_path / "darboux_-1.json").read_bytes())
    assert summary["admissible"]
    frame = pd.read_csv(tmp_path / "darboux_-1.csv")
    assert list(frame.columns) == ["x", "Re V1", "Im V1", "Re V2", "Im V2", "Re dV", "Im dV"]
    assert (frame["Re dV"] + 2.0).abs().max() <= 1e-8


def test_imaginary_quadratic_fails_validation(tmp_path):
    result = runner.invoke(app, ["run", str(SCENARIOS / "imaginary_quadratic.yaml"), "--out", str(tmp_path)])
    assert result.exit_code == EXIT_FAILURE
    report = orjson.loads((tmp_path / "run_report.json").read_bytes())
    assert report["tasks"][0]["status"] == "fail"


def test_unknown_task_is_a_configuration_error(tmp_path):
    path = write_scenario(tmp_path, "potential: x^2\nR0: 1\neps: 0.5\ntasks: [frobnicate]\n")
    result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_CONFIG
    assert not (tmp_path / "out" / "run_report.json").exists()


def test_reruns_are_byte_identical(tmp_path):
    scenario = load_scenario(SCENARIOS / "imaginary_quadratic.yaml", [f"output_dir={tmp_path.as_posix()}"])
    ScenarioWorkflow().run(scenario, label="imaginary_quadratic")
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    ScenarioWorkflow().run(scenario, label="imaginary_quadratic")
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert first == second
    assert set(first) == {"run_report.json", "validate.json"}


@pytest.mark.parametrize("potential", ["x^2 +", "foo(x)"])
def test_unparsable_potential_is_a_configuration_error(tmp_path, potential):
    path = write_scenario(tmp_path, f"potential: {potential}\nR0: 1\neps: 0.5\ntasks: [validate]\n")
    result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_CONFIG
    assert not (tmp_path / "out" / "run_report.json").exists()


def test_cache_keeps_the_first_stored_value(tmp_path):
    run = RunContext.from_scenario(Scenario(potential="x^2", R0=1.0, eps=0.5, tasks=["validate"]), tmp_path)
    first, second = object(), object()
    assert run.remember(run.transforms, (-1, "up"), first) is first
    assert run.remember(run.transforms, (-1, "up"), second) is first
    assert run.transforms[(-1, "up")] is first


def test_concurrent_units_share_one_zero_mode_pair(tmp_path):
    scenario = Scenario(potential="x^2", R0=1.0, eps=0.5, lambdas=[-1], directions=["up"], tasks=["solve"])
    run = RunContext.from_scenario(scenario, tmp_path)
    pairs = Parallel(n_jobs=4, prefer="threads")(
        delayed(zero_modes)(run, -1 + 0j, "up") for _ in range(4))
    assert all(pair is run.zero_modes[(-1 + 0j, "up")] for pair in pairs)
