"""One runner per scenario task; units of work are (lambda, direction) pairs or the whole scenario."""
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from config.constants import SUITE_ANCHORS
from darboux.first_order import TransformResult, darboux_once
from darboux.intertwiner import IntertwinerN, StrippingFlag, build_intertwiner, dual_basis
from darboux.suites import chain_mapping_suite, intertwiner_suite, lemma10_suite
from jordan.basis import BasisEntry, CanonicalBasis
from jordan.fixtures import next_associate
from jordan.index import index_report
from jordan.suites import corollary3_check, corollary8_check, kernel_duality_suite, lemma3_check
from potential.branch import BranchContext, Direction, SpectralValue, compute_R2
from potential.estimates import lemma5_suite
from potential.expression import parse_potential
from potential.profile import PotentialProfile, validate_class
from quadrature.functionals import detect_variant, lemma6_suite, lemma7_suite
from scenario.config import Scenario
from scenario.report import Status, TaskOutcome, emit_plotdata, write_report
from solutions.asymptotics import model_for
from solutions.chains import JordanChain, build_associated_chain
from solutions.formal import FormalSolution, Verdict, classified, extend_to_axis
from solutions.suites import lemma8_suite, lemma9_suite
from solutions.zero_modes import build_decaying_ode, build_growing
from utils.errors import InconclusiveVerdictError
from utils.logging import logger

Unit = Tuple[Optional[complex], Optional[str]]

# Tasks run once per scenario rather than per (lambda, direction)
GLOBAL_TASKS = ("validate", "intertwine", "index")
# Tasks run once per lambda
LAMBDA_TASKS = ("verify-lemma-5",)


def lam_slug(lam: complex) -> str:
    return re.sub(r"[^0-9A-Za-z.+-]", "_", str(SpectralValue(complex(lam))))


def _status(passed: Optional[bool]) -> Status:
    if passed is None:
        return Status.INCONCLUSIVE
    return Status.PASS if passed else Status.FAIL


@dataclass
class RunContext:
    """Scenario, profile, output directory and the artifacts later tasks reuse."""

    scenario: Scenario
    profile: PotentialProfile
    out_dir: Path
    contexts: Dict[complex, BranchContext] = field(default_factory=dict)
    zero_modes: Dict[Unit, Tuple[FormalSolution, FormalSolution]] = field(default_factory=dict)
    chains: Dict[Unit, JordanChain] = field(default_factory=dict)
    transforms: Dict[Unit, TransformResult] = field(default_factory=dict)
    intertwiner: Optional[IntertwinerN] = None
    dual: Optional[CanonicalBasis] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def from_scenario(cls, scenario: Scenario, out_dir: Optional[Path] = None) -> "RunContext":
        expr = parse_potential(scenario.potential)
        profile = PotentialProfile.from_expression(expr, scenario.R0, scenario.eps, scenario.Xmax)
        out = Path(out_dir or scenario.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return cls(scenario=scenario, profile=profile, out_dir=out)

    @property
    def tol(self) -> float:
        return self.scenario.tolerances.ode

    def context(self, lam: complex) -> BranchContext:
        with self._lock:
            if lam not in self.contexts:
                self.contexts[lam] = compute_R2(self.profile, SpectralValue(complex(lam)))
            return self.contexts[lam]

    def remember(self, cache: Dict, key: Unit, value):
        """Store value under key unless another thread got there first; return the stored one."""
        with self._lock:
            return cache.setdefault(key, value)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def units(self, task: str) -> List[Unit]:
        if task in GLOBAL_TASKS:
            return [(None, None)]
        if task == "darboux" and self.scenario.darboux.phi is not None:
            return [(SpectralValue.parse(self.scenario.darboux.lam).value, None)]
        if task in LAMBDA_TASKS:
            return [(lam, None) for lam in self.scenario.lambdas]
        return [(lam, d) for lam in self.scenario.lambdas for d in self.scenario.directions]


def zero_modes(run: RunContext, lam: complex, direction: str) -> Tuple[FormalSolution, FormalSolution]:
    key = (lam, direction)
    if key not in run.zero_modes:
        ctx = run.context(lam)
        phi0 = build_decaying_ode(run.profile, ctx, direction, run.scenario.seed_x, run.tol)
        return run.remember(run.zero_modes, key, (phi0, build_growing(phi0, run.profile, ctx, run.tol)))
    return run.zero_modes[key]


def decaying_chain(run: RunContext, lam: complex, direction: str) -> JordanChain:
    key = (lam, direction)
    if key not in run.chains:
        phi0, _ = zero_modes(run, lam, direction)
        chain, _ = build_associated_chain(run.profile, run.context(lam), direction, run.scenario.n_max,
                                          run.tol, run.scenario.seed_x, phi0=phi0)
        return run.remember(run.chains, key, chain)
    return run.chains[key]


def transform(run: RunContext, lam: complex, direction: Optional[str]) -> TransformResult:
    key = (lam, direction)
    if key not in run.transforms:
        section = run.scenario.darboux
        if direction is None:
            phi = FormalSolution.from_expression(section.phi, SpectralValue.parse(section.lam), section.reach,
                                                 label=section.phi)
        else:
            phi = zero_modes(run, lam, direction)[0]
        return run.remember(run.transforms, key, darboux_once(run.profile, phi, tol=run.scenario.tolerances.chain))
    return run.transforms[key]


def basis_from_scenario(run: RunContext) -> CanonicalBasis:
    """Canonical basis from the intertwine section: closed-form chains or decaying chains through the origin."""
    entries = []
    for spec in run.scenario.intertwine.basis:
        lam = SpectralValue.parse(spec.lam)
        if spec.phi == "decaying":
            ctx = compute_R2(run.profile, lam)
            chain, _ = build_associated_chain(run.profile, ctx, Direction.UP, spec.k - 1, run.tol,
                                              run.scenario.seed_x)
            members: List[FormalSolution] = []
            for member in chain.members:
                members.append(extend_to_axis(member, run.profile, members[-1] if members else None, run.tol))
        else:
            members = [FormalSolution.from_expression(spec.phi, lam, spec.reach, label=f"phi_({len(entries)},0)")]
            for j in range(1, spec.k):
                members.append(next_associate(run.profile, members[-1], spec.reach,
                                              label=f"phi_({len(entries)},{j})"))
        entries.append(BasisEntry(lam=lam, members=tuple(classified(m, run.profile) for m in members)))
    return CanonicalBasis(entries=tuple(entries), side="minus", profile=run.profile)


def intertwiner(run: RunContext) -> Tuple[IntertwinerN, CanonicalBasis]:
    if run.intertwiner is None:
        flag = StrippingFlag(cannot_be_stripped=run.scenario.intertwine.cannot_be_stripped)
        run.intertwiner = build_intertwiner(basis_from_scenario(run), flag)
        run.dual = dual_basis(run.intertwiner)
    return run.intertwiner, run.dual


def _validate(run: RunContext, lam, direction) -> TaskOutcome:
    report = validate_class(run.profile, run.profile.default_grid())
    path = write_report(report, run.path("validate.json"))
    detail = "; ".join(f"condition {c} fails at x={x:.6g}" for c, x in report.failures)
    return TaskOutcome(task="validate", unit="profile", status=_status(report.passed), detail=detail,
                       artifacts=[path.name])


def _solve(run: RunContext, lam, direction) -> TaskOutcome:
    phi0, hat0 = zero_modes(run, lam, direction)
    ctx = run.context(lam)
    stem = f"solve_{lam_slug(lam)}_{direction}"
    variant = detect_variant(run.profile, direction)
    files = [
        emit_plotdata(phi0, run.path(f"{stem}_phi0.csv"), model=model_for(phi0, run.profile, ctx, variant)),
        emit_plotdata(hat0, run.path(f"{stem}_hat_phi0.csv")),
        write_report({"lambda": lam, "direction": direction, "R1": ctx.R1, "seed": phi0.seed,
                      "reach": list(phi0.reach), "decaying_verdict": phi0.norm.at(direction),
                      "growing_verdict": hat0.norm.at(direction)}, run.path(f"{stem}.json")),
    ]
    verdicts = (phi0.norm.at(direction), hat0.norm.at(direction))
    if Verdict.INCONCLUSIVE in verdicts:
        status = Status.INCONCLUSIVE
    else:
        status = _status(verdicts == (Verdict.YES, Verdict.NO))
    return TaskOutcome(task="solve", unit=f"lambda={lam_slug(lam)} {direction}", status=status,
                       detail=f"verdicts {verdicts[0].value}/{verdicts[1].value}", artifacts=[f.name for f in files])


def _chain(run: RunContext, lam, direction) -> TaskOutcome:
    chain = decaying_chain(run, lam, direction)
    stem = f"chain_{lam_slug(lam)}_{direction}"
    files = [write_report(chain.manifest(), run.path(f"{stem}.json")), emit_plotdata(chain, run.path(f"{stem}.csv"))]
    worst = max(chain.link_residuals, default=0.0)
    return TaskOutcome(task="chain", unit=f"lambda={lam_slug(lam)} {direction}",
                       status=_status(worst <= run.scenario.tolerances.chain),
                       detail=f"worst link residual {worst:.3e}", artifacts=[f.name for f in files])


def _darboux(run: RunContext, lam, direction) -> TaskOutcome:
    result = transform(run, lam, direction)
    stem = f"darboux_{lam_slug(lam)}" + (f"_{direction}" if direction else "")
    files = [write_report(result.summary(), run.path(f"{stem}.json")), emit_plotdata(result, run.path(f"{stem}.csv"))]
    passed = None if result.validation is None else result.validation.passed
    detail = f"V2 = {result.v2_text}" if result.v2_text else f"numeric V2, R0'={result.v2.R0:.6g}"
    return TaskOutcome(task="darboux", unit=f"lambda={lam_slug(lam)}" + (f" {direction}" if direction else ""),
                       status=_status(passed), detail=detail, artifacts=[f.name for f in files])


def _intertwine(run: RunContext, lam, direction) -> TaskOutcome:
    q, dual = intertwiner(run)
    report = intertwiner_suite(q)
    files = [write_report(report, run.path("intertwine.json"))]
    passed = report.passed and q.basis.check_chains(run.scenario.tolerances.chain)
    duality = kernel_duality_suite(q, dual)
    if duality.ran:
        files.append(write_report(duality, run.path("duality.json")))
        passed = passed and duality.passed
    return TaskOutcome(task="intertwine", unit=f"N={q.order}", status=_status(passed),
                       detail=f"composition gap {report.composition_gap:.3e}, partner gap {report.partner_gap:.3e}",
                       artifacts=[f.name for f in files])


def _index(run: RunContext, lam, direction) -> TaskOutcome:
    q, dual = intertwiner(run)
    files, passed = [], True
    for declared in run.scenario.index:
        value = SpectralValue.parse(declared.lam).value
        report = index_report(value, q.basis, dual, declared.nu_plus, declared.nu_minus)
        stem = f"index_{lam_slug(value)}"
        files += [write_report(report.manifest(), run.path(f"{stem}.json")),
                  emit_plotdata(report, run.path(f"{stem}.csv"))]
        passed = passed and report.passed
    return TaskOutcome(task="index", unit=f"{len(run.scenario.index)} spectral value(s)", status=_status(passed),
                       artifacts=[f.name for f in files])


def _lemma5(run: RunContext, lam, direction) -> TaskOutcome:
    report = lemma5_suite(run.profile, run.context(lam))
    path = write_report(report, run.path(f"lemma5_{lam_slug(lam)}.json"))
    return TaskOutcome(task="verify-lemma-5", unit=f"lambda={lam_slug(lam)}", status=_status(report.passed),
                       artifacts=[path.name])


def _lemma6(run: RunContext, lam, direction) -> TaskOutcome:
    report = lemma6_suite(run.profile, run.context(lam), direction)
    stem = f"lemma6_{lam_slug(lam)}_{direction}"
    files = [write_report(report, run.path(f"{stem}.json"), exclude=("samples",)),
             emit_plotdata(report, run.path(f"{stem}.csv"))]
    return TaskOutcome(task="verify-lemma-6", unit=f"lambda={lam_slug(lam)} {direction}",
                       status=_status(report.passed), artifacts=[f.name for f in files])


def _lemma7(run: RunContext, lam, direction) -> TaskOutcome:
    report = lemma7_suite(run.profile, run.context(lam), direction)
    path = write_report(report, run.path(f"lemma7_{lam_slug(lam)}_{direction}.json"))
    return TaskOutcome(task="verify-lemma-7", unit=f"lambda={lam_slug(lam)} {direction}",
                       status=_status(report.passed), detail="" if report.triggered else "not triggered",
                       artifacts=[path.name])


def _lemma8(run: RunContext, lam, direction) -> TaskOutcome:
    ctx = run.context(lam)
    report = lemma8_suite(run.profile, ctx, direction, run.scenario.seed_x, run.tol)
    unique = corollary3_check(run.profile, ctx, direction)
    stem = f"lemma8_{lam_slug(lam)}_{direction}"
    files = [write_report(report, run.path(f"{stem}.json")), write_report(unique, run.path(f"{stem}_unique.json"))]
    return TaskOutcome(task="verify-lemma-8", unit=f"lambda={lam_slug(lam)} {direction}",
                       status=_status(report.passed and unique.passed), artifacts=[f.name for f in files])


def _lemma9(run: RunContext, lam, direction) -> TaskOutcome:
    ctx = run.context(lam)
    report = lemma9_suite(run.profile, ctx, direction, run.scenario.n_max, run.scenario.seed_x, run.tol)
    whole_axis = corollary8_check(decaying_chain(run, lam, direction))
    flag = StrippingFlag(cannot_be_stripped=run.scenario.intertwine.cannot_be_stripped)
    stable = lemma3_check(run.profile, ctx, flag, direction, run.scenario.n_max)
    stem = f"lemma9_{lam_slug(lam)}_{direction}"
    files = [write_report(report, run.path(f"{stem}.json")),
             write_report({"whole_axis": whole_axis, "verdict_stability": stable}, run.path(f"{stem}_kernels.json"))]
    passed = report.passed and whole_axis.passed and stable.passed is not False
    return TaskOutcome(task="verify-lemma-9", unit=f"lambda={lam_slug(lam)} {direction}", status=_status(passed),
                       artifacts=[f.name for f in files])


def _lemma10(run: RunContext, lam, direction) -> TaskOutcome:
    result = transform(run, lam, direction)
    report = lemma10_suite(result, run.context(lam))
    stem = f"lemma10_{lam_slug(lam)}" + (f"_{direction}" if direction else "")
    files = [write_report(report, run.path(f"{stem}.json"))]
    passed = report.passed
    if direction is not None:
        mapping = chain_mapping_suite(result, decaying_chain(run, lam, direction))
        files.append(write_report(mapping, run.path(f"{stem}_chain.json")))
        passed = passed and mapping.passed
    return TaskOutcome(task="verify-lemma-10", unit=f"lambda={lam_slug(lam)}" + (f" {direction}" if direction else ""),
                       status=_status(passed), artifacts=[f.name for f in files])


RUNNERS: Dict[str, Callable[[RunContext, Optional[complex], Optional[str]], TaskOutcome]] = {
    "validate": _validate,
    "solve": _solve,
    "chain": _chain,
    "darboux": _darboux,
    "intertwine": _intertwine,
    "index": _index,
    "verify-lemma-5": _lemma5,
    "verify-lemma-6": _lemma6,
    "verify-lemma-7": _lemma7,
    "verify-lemma-8": _lemma8,
    "verify-lemma-9": _lemma9,
    "verify-lemma-10": _lemma10,
}


def units_for(run: RunContext, task: str) -> List[Unit]:
    if task == "verify-lemma-10" and run.scenario.darboux.phi is not None:
        return run.units("darboux")
    return run.units(task)


def run_unit(run: RunContext, task: str, unit: Unit) -> TaskOutcome:
    """Run one unit; library errors become failed or inconclusive outcomes."""
    lam, direction = unit
    label = task if lam is None else f"{task} lambda={lam_slug(lam)}" + (f" {direction}" if direction else "")
    start = time.perf_counter()
    try:
        outcome = RUNNERS[task](run, lam, direction)
    except InconclusiveVerdictError as e:
        logger.warning(f"{label}: cannot verify ({e})")
        outcome = TaskOutcome(task=task, unit=label, status=Status.INCONCLUSIVE, detail=str(e))
    except Exception as e:
        logger.error(f"{label} failed: {e}")
        outcome = TaskOutcome(task=task, unit=label, status=Status.FAIL, detail=f"{type(e).__name__}: {e}")
    outcome.anchor = SUITE_ANCHORS.get(task, "")
    outcome.seconds = time.perf_counter() - start
    return outcome
