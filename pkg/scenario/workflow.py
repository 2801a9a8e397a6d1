import time
from pathlib import Path
from typing import Dict, List, Optional, TypedDict

from joblib import Parallel, delayed
from langgraph.graph import END, StateGraph

from scenario.config import Scenario
from scenario.report import RunReport, TaskOutcome
from scenario.tasks import RunContext, run_unit, units_for
from utils.logging import logger


class ScenarioState(TypedDict):
    scenario: Scenario
    label: str
    out_dir: Optional[Path]
    run: Optional[RunContext]
    pending: List[str]
    outcomes: List[TaskOutcome]
    report: Optional[RunReport]


class ScenarioWorkflow:
    def __init__(self):
        self.compiled_workflow = self.build_workflow()

    def build_workflow(self):
        """prepare -> execute (one task per visit) -> report."""
        workflow = StateGraph(ScenarioState)

        workflow.add_node("prepare", self._prepare_step)
        workflow.add_node("execute", self._execute_step)
        workflow.add_node("report", self._report_step)

        workflow.set_entry_point("prepare")
        workflow.add_conditional_edges(
            "prepare",
            self._decide_next_task,
            {
                "next_task": "execute",
                "finish": "report"
            }
        )
        workflow.add_conditional_edges(
            "execute",
            self._decide_next_task,
            {
                "next_task": "execute",
                "finish": "report"
            }
        )
        workflow.add_edge("report", END)
        return workflow.compile()

    def _prepare_step(self, state: ScenarioState) -> Dict:
        scenario = state["scenario"]
        run = RunContext.from_scenario(scenario, state["out_dir"])
        tasks = scenario.ordered_tasks()
        logger.info(f"Running {state['label']}: {', '.join(tasks)} on V = {scenario.potential} into {run.out_dir}")
        return {"run": run, "pending": tasks}

    def _execute_step(self, state: ScenarioState) -> Dict:
        run = state["run"]
        task, *rest = state["pending"]
        units = units_for(run, task)
        if len(units) > 1 and run.scenario.jobs > 1:
            outcomes = Parallel(n_jobs=run.scenario.jobs, prefer="threads")(
                delayed(run_unit)(run, task, unit) for unit in units
            )
        else:
            outcomes = [run_unit(run, task, unit) for unit in units]
        for outcome in outcomes:
            logger.info(f"{outcome.unit}: {outcome.status.value}")
        return {"pending": rest, "outcomes": state["outcomes"] + list(outcomes)}

    def _decide_next_task(self, state: ScenarioState) -> str:
        return "next_task" if state["pending"] else "finish"

    def _report_step(self, state: ScenarioState) -> Dict:
        report = RunReport(scenario=state["label"], outcomes=state["outcomes"])
        report.write(state["run"].out_dir)
        return {"report": report}

    def run(self, scenario: Scenario, label: str = "scenario", out_dir: Optional[Path] = None) -> RunReport:
        try:
            start = time.perf_counter()
            initial_state = ScenarioState(
                scenario=scenario,
                label=label,
                out_dir=out_dir,
                run=None,
                pending=[],
                outcomes=[],
                report=None
            )
            final_state = self.compiled_workflow.invoke(
                initial_state, {"recursion_limit": 4 * len(scenario.tasks) + 10}
            )
            report = final_state["report"]
            report.seconds = time.perf_counter() - start
            return report
        except Exception as e:
            logger.error(f"Scenario run failed: {e}")
            raise
