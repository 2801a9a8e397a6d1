"""First-order Darboux transforms: factors q1+- = -+d + chi and the partner potential V2 = V1 + 2 chi'."""
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import sympy as sp

from config.constants import SLOPE_MARGIN
from config.settings import settings
from darboux.jets import Jet, chi_jet, find_zeros, leibniz, member_jet, potential_jet
from potential.branch import BranchContext, Direction, SpectralValue, branch_power, xi_abs
from potential.estimates import is_bounded
from potential.expression import PotentialExpr, X, to_text
from potential.profile import KReport, PotentialProfile, validate_class
from quadrature.grid import Grid
from quadrature.improper import decay_exponent
from quadrature.ode import absolute_residual, sample
from solutions.chains import JordanChain, interior_points
from solutions.formal import (
    FormalSolution,
    Verdict,
    classify_normalizability,
    trusted_span,
)
from utils.errors import ResidualError, ZeroInDomainError
from utils.logging import logger

_DOMAIN_SAMPLES = 4096
_WINDOW_SAMPLES = 96

# Relative size below which a mapped function counts as identically zero
KILL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FirstOrderFactor:
    """q1- = d + chi and q1+ = -d + chi between h+ (potential jet `vjet`) and its partner.

    `vjet(x, k)` returns V, ..., V^(k) of the h+ potential; chi' follows from
    the zero-mode equation, chi' = chi^2 - (V - lam).
    """

    lam: SpectralValue
    chi: Callable[[np.ndarray], np.ndarray]
    vjet: Callable[[np.ndarray, int], Jet]
    phi: Optional[FormalSolution] = None
    label: str = ""
    order: int = 1

    @classmethod
    def from_zero_mode(cls, phi: FormalSolution, profile: PotentialProfile,
                       lam: Optional[SpectralValue] = None) -> "FirstOrderFactor":
        def chi(x):
            psi, dpsi = phi(np.asarray(x, dtype=float))
            return -np.asarray(dpsi) / np.asarray(psi)

        return cls(lam=lam or phi.lam, chi=chi, vjet=lambda x, k: potential_jet(profile, x, k), phi=phi,
                   label=phi.label)

    def chi_jet(self, x: np.ndarray, order: int) -> Jet:
        x = np.asarray(x, dtype=float)
        return chi_jet(self.chi(x), self.vjet(x, max(order - 1, 0)), self.lam.value, order)

    def act(self, jet: Jet, x: np.ndarray, transpose: bool = False) -> Jet:
        """(d + chi) g, or (-d + chi) g when transposed; the result is one order shorter."""
        order = jet.shape[0] - 2
        c = self.chi_jet(x, order)
        sign = -1.0 if transpose else 1.0
        return np.array([sign * jet[m + 1] + leibniz(c, jet, m) for m in range(order + 1)])

    def apply(self, jet: Jet, x: np.ndarray) -> np.ndarray:
        return self.act(jet[:2], x)[0]

    def partner_jet(self, x: np.ndarray, order: int) -> Jet:
        """V2 = V1 + 2 chi' and its derivatives."""
        c = self.chi_jet(x, order + 1)
        return self.vjet(np.asarray(x, dtype=float), order) + 2.0 * c[1:]

    def reconstruction_gap(self, x: np.ndarray, v2: Optional[Callable] = None) -> Tuple[float, float]:
        """Relative gaps of lam + chi^2 -+ chi' against V1 and the stored V2, chi' by central differences of chi."""
        x = np.asarray(x, dtype=float)
        h = 1e-3 * np.maximum(1.0, np.abs(x))
        d = [np.asarray(self.chi(x + k * h)) for k in (-2, -1, 1, 2)]
        slope = (d[0] - 8 * d[1] + 8 * d[2] - d[3]) / (12 * h)
        chi = np.asarray(self.chi(x))
        v1 = self.vjet(x, 0)[0]
        v2 = self.partner_jet(x, 0)[0] if v2 is None else np.asarray(v2(x))
        lam = self.lam.value
        gap1 = np.max(np.abs(lam + chi ** 2 - slope - v1)) / np.max(np.abs(v1))
        gap2 = np.max(np.abs(lam + chi ** 2 + slope - v2)) / np.max(np.abs(v2))
        return float(gap1), float(gap2)


@dataclass(frozen=True, eq=False)
class TransformResult:
    """Partner potential of a first-order transform on the zero-free working interval."""

    v2: PotentialProfile
    domain: Tuple[float, float]
    factor: FirstOrderFactor
    profile1: PotentialProfile
    symbolic: bool
    admissible: bool
    validation: Optional[KReport] = None

    def delta_v(self, x: np.ndarray) -> np.ndarray:
        """2 chi'."""
        return 2.0 * self.factor.chi_jet(x, 1)[1]

    @property
    def v2_text(self) -> Optional[str]:
        if self.v2.expr is None:
            return None
        try:
            return to_text(self.v2.expr.root)
        except ValueError:
            return str(self.v2.expr.root)

    def samples(self, n: int = 401) -> Dict[str, np.ndarray]:
        x = np.linspace(*self.domain, n)
        return {"x": x, "V1": np.asarray(self.profile1.v(x)) + 0j, "V2": np.asarray(self.v2.v(x)) + 0j,
                "dV": self.delta_v(x)}

    def summary(self) -> dict:
        return {
            "lambda": self.factor.lam.value,
            "admissible": self.admissible,
            "domain": list(self.domain),
            "symbolic": self.symbolic,
            "v2": self.v2_text,
            "R0": self.v2.R0,
            "eps": self.v2.eps,
            "Xmax": self.v2.Xmax,
            "class_passed": None if self.validation is None else self.validation.passed,
            "class_failures": [] if self.validation is None else self.validation.failures,
        }


def covered_sides(domain: Tuple[float, float], r0: float) -> List[Direction]:
    lo, hi = domain
    return [d for d, extent in ((Direction.UP, hi), (Direction.DOWN, -lo)) if extent > r0]


def grid_side(sides: List[Direction]) -> str:
    if len(sides) == 2:
        return "both"
    return "plus" if sides[0] is Direction.UP else "minus"


def outer_radius(v: Callable, r0: float, extent: float, floor: float, sides: List[Direction]) -> float:
    """Smallest radius beyond which Re V stays at or above `floor` on every covered side."""
    t = np.geomspace(r0, extent, _DOMAIN_SAMPLES)
    radius = r0
    for side in sides:
        low = np.nonzero(np.asarray(v(side.sign * t)).real < floor)[0]
        if low.size:
            if low[-1] + 1 >= t.size:
                return extent
            radius = max(radius, float(t[low[-1] + 1]))
    return radius


def _numeric_profile(factor: FirstOrderFactor, R0: float, eps: float, Xmax: float, sides: List[Direction],
                     label: str) -> PotentialProfile:
    profile = PotentialProfile(v=lambda x: factor.partner_jet(x, 0)[0],
                               d1=lambda x: factor.partner_jet(x, 1)[1],
                               d2=lambda x: factor.partner_jet(x, 2)[2],
                               R0=R0, eps=eps, C=0.0, Xmax=Xmax, label=label)
    if not sides:
        return profile
    t = np.geomspace(R0, Xmax, 256)
    values = np.concatenate([np.asarray(profile.v(side.sign * t)) for side in sides])
    ratio = np.abs(values.imag) / np.maximum(np.abs(values.real), 1e-300)
    return replace(profile, C=float(ratio.max()))


def darboux_once(profile1: PotentialProfile, phi: FormalSolution,
                 lam: Union[SpectralValue, complex, None] = None, tol: float = None) -> TransformResult:
    """V2 = V1 - 2 (ln phi)'' from a zero-free zero mode phi of h+ - lam.

    A closed-form phi on a closed-form V1 gives a symbolic V2; otherwise V2 is
    evaluated through chi = -phi'/phi. The result is re-validated on the outer
    grid with R0 moved out to where Re V2 >= eps/2.
    """
    tol = tol or settings.CHAIN_TOL
    if lam is None:
        lam = phi.lam
    elif not isinstance(lam, SpectralValue):
        lam = SpectralValue.parse(lam)
    if not lam.admissible:
        logger.warning(f"lambda={lam} is not admissible; transform computed, lemma suites will refuse it")

    domain = trusted_span(phi)
    x = interior_points(*domain)
    residual, kinetic, _ = absolute_residual(profile1, lam.value, phi, x)
    relative = float(residual.max() / max(kinetic.max(), 1e-300))
    if relative > tol:
        raise ResidualError(f"{phi.label or 'phi'} is not a zero mode at lambda={lam}", relative)
    dense = np.linspace(domain[0], domain[1], _DOMAIN_SAMPLES)
    zeros = find_zeros(dense, phi(dense)[0])
    if zeros:
        raise ZeroInDomainError(f"{phi.label or 'phi'} vanishes on [{domain[0]:.6g}, {domain[1]:.6g}]", zeros)

    factor = FirstOrderFactor.from_zero_mode(phi, profile1, lam)
    symbolic = phi.expr is not None and profile1.expr is not None
    sides = covered_sides(domain, profile1.R0)
    extent = min([profile1.Xmax] + [domain[1] if s is Direction.UP else -domain[0] for s in sides])
    floor = 0.5 * profile1.eps
    label = f"darboux({profile1.label}; {phi.label or 'phi'})"

    if symbolic:
        root = sp.simplify(profile1.expr.root - 2 * sp.diff(sp.log(phi.expr), X, 2))
        expr = PotentialExpr(root)
        R0 = outer_radius(expr, profile1.R0, extent, floor, sides)
        v2 = PotentialProfile.from_expression(expr, R0, floor, max(extent, R0 * (1 + 1e-6)),
                                              check_derivatives=False)
    else:
        v = lambda s: factor.partner_jet(s, 0)[0]
        R0 = outer_radius(v, profile1.R0, extent, floor, sides)
        v2 = _numeric_profile(factor, R0, floor, extent, sides, label)

    validation = None
    if sides and R0 < 0.5 * extent:
        validation = validate_class(v2, Grid.geometric(R0, extent, settings.GRID_POINTS, grid_side(sides)))
    else:
        logger.warning(f"{label}: no outer region left for class validation (R0'={R0:.4g}, extent {extent:.4g})")
    logger.info(f"Built {'symbolic' if symbolic else 'numeric'} transform {label} on "
                f"[{domain[0]:.6g}, {domain[1]:.6g}], R0'={R0:.4g}")
    return TransformResult(v2=v2, domain=domain, factor=factor, profile1=profile1, symbolic=symbolic,
                           admissible=lam.admissible, validation=validation)


@dataclass(frozen=True)
class DeltaVCheck:
    statistic: float
    passed: bool
    covered: bool = True


@dataclass(frozen=True)
class DeltaVReport:
    lam: complex
    checks: Dict[str, DeltaVCheck]
    passed: bool


def _negligible(values: np.ndarray, scale: np.ndarray) -> bool:
    return bool(np.max(np.abs(values) / scale) <= 1e-10)


def _slope_check(values: np.ndarray, scale: np.ndarray, weight: np.ndarray, limit: float) -> DeltaVCheck:
    if _negligible(values, scale):
        return DeltaVCheck(statistic=float("-inf"), passed=True)
    slope = decay_exponent(np.maximum(np.abs(values) / scale, 1e-300), weight)
    return DeltaVCheck(statistic=slope, passed=slope <= limit)


def _bounded_check(values: np.ndarray, scale: np.ndarray) -> DeltaVCheck:
    ratio = np.abs(values) / scale
    if _negligible(values, scale):
        return DeltaVCheck(statistic=0.0, passed=True)
    return DeltaVCheck(statistic=float(ratio.max()), passed=is_bounded(ratio))


def delta_v_suite(result: TransformResult, ctx: BranchContext) -> DeltaVReport:
    """Large-|x| laws of dV = V2 - V1 on each covered side.

    a21/a22: dV -+ V1'/sqrt(V1 - lam) is O(V1/xi^2); a23: dV' xi^2 / V1^(3/2)
    bounded; a24: dV'' xi^2 / V1^2 bounded; a25/a26: dV/V1 -> 0.
    """
    lam = ctx.value
    lo, hi = result.domain
    checks: Dict[str, DeltaVCheck] = {}
    bounded: Dict[str, List[DeltaVCheck]] = {"a23": [], "a24": []}
    for side, leading, ratio_id in ((Direction.UP, "a21", "a25"), (Direction.DOWN, "a22", "a26")):
        reach = hi if side is Direction.UP else -lo
        start = max(2.0 * ctx.R1, result.v2.R0)
        if reach * 0.97 <= start * 1.5:
            checks[leading] = checks[ratio_id] = DeltaVCheck(statistic=float("nan"), passed=False, covered=False)
            continue
        t = np.geomspace(start, 0.97 * reach, _WINDOW_SAMPLES)
        x = side.sign * t
        v1 = np.asarray(result.profile1.v(x))
        d1 = np.asarray(result.profile1.d1(x))
        root = branch_power(v1 - lam, 0.5)
        c = result.factor.chi_jet(x, 3)
        dv, dv1, dv2 = 2.0 * c[1], 2.0 * c[2], 2.0 * c[3]
        weight = 1.0 + xi_abs(x, result.profile1, side)
        sigma = 1.0 if np.median((c[0] / root).real) > 0 else -1.0
        absv = np.abs(v1)

        checks[leading] = _slope_check(dv - sigma * d1 / root, absv, weight, -2.0 + SLOPE_MARGIN)
        checks[ratio_id] = _slope_check(dv, absv, weight, -SLOPE_MARGIN)
        bounded["a23"].append(_bounded_check(dv1 * weight ** 2, absv ** 1.5))
        bounded["a24"].append(_bounded_check(dv2 * weight ** 2, absv ** 2))

    for key, parts in bounded.items():
        if parts:
            checks[key] = DeltaVCheck(statistic=max(p.statistic for p in parts),
                                      passed=all(p.passed for p in parts))
        else:
            checks[key] = DeltaVCheck(statistic=float("nan"), passed=False, covered=False)
    covered = [c for c in checks.values() if c.covered]
    passed = bool(covered) and all(c.passed for c in covered)
    if not passed:
        failing = sorted(k for k, c in checks.items() if c.covered and not c.passed)
        logger.warning(f"{result.v2.label}: partner-potential asymptotics fail {failing}")
    return DeltaVReport(lam=lam, checks=dict(sorted(checks.items())), passed=passed)


def image_of_member(factor, chain_members, n: int, profile1: PotentialProfile, lam: complex):
    """Evaluator (psi, psi') of q applied to chain member n, derivatives of the member from the equation."""
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        jet = member_jet(chain_members, n, profile1, lam, x, factor.order + 1)
        out = factor.act(jet, x)
        return out[0], out[1]

    return evaluate


@dataclass(frozen=True)
class MappedMember:
    order: int
    kind: str
    input_verdict: str
    output_verdict: str
    vanishes: bool


@dataclass(frozen=True)
class Corollary6Report:
    lam: complex
    direction: str
    members: List[MappedMember] = field(default_factory=list)
    passed: bool = True


def corollary6_check(result: TransformResult, chain: JordanChain) -> Corollary6Report:
    """Classify q1- phi_n for every chain member; normalizable inputs must stay normalizable."""
    side = chain.direction
    lam = chain.lam
    mapped: List[MappedMember] = []
    for n, member in enumerate(chain.members):
        lo = max(trusted_span(member)[0], result.domain[0])
        hi = min(trusted_span(member)[1], result.domain[1])
        evaluate = image_of_member(result.factor, chain.members, n, result.profile1, lam)
        x = np.linspace(lo, hi, settings.GRID_POINTS)
        psi, _ = evaluate(x)
        original = np.asarray(member(x)[0])
        vanishes = bool(np.max(np.abs(psi)) <= KILL_TOL * np.max(np.abs(original)))
        if vanishes:
            out = Verdict.YES
        else:
            reach = (max(-lo, 0.0), max(hi, 0.0))
            image = FormalSolution(order=n, lam=member.lam, direction=side, kind=member.kind,
                                   traj=sample(evaluate, x, member.traj.tol_achieved), reach=reach)
            out = classify_normalizability(image, result.v2).at(side)
        mapped.append(MappedMember(order=n, kind=member.kind.value, input_verdict=member.norm.at(side).value,
                                   output_verdict=out.value, vanishes=vanishes))
    passed = all(m.output_verdict == Verdict.YES.value for m in mapped if m.input_verdict == Verdict.YES.value)
    if any(m.output_verdict == Verdict.INCONCLUSIVE.value for m in mapped):
        logger.warning(f"Inconclusive image verdicts under q1- at lambda={lam}")
    if not passed:
        logger.warning(f"q1- lost normalizability of a {chain.kind.value} chain member at lambda={lam}")
    return Corollary6Report(lam=lam, direction=side.value, members=mapped, passed=passed)
