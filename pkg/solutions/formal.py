"""Formal solutions, normalizability verdicts and the helpers shared by the builders."""
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from config.constants import INCONCLUSIVE_BAND
from config.settings import settings
from potential.branch import Direction, SpectralValue, xi_abs
from potential.expression import X
from potential.profile import PotentialProfile
from quadrature.grid import Grid
from quadrature.improper import fit_log_tail
from quadrature.ode import ComplexTrajectory, integrate_schrodinger, piecewise, sample
from utils.logging import logger

_CLASSIFIER_SAMPLES = 96


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


class Kind(str, Enum):
    DECAYING = "decaying"
    GROWING = "growing"


@dataclass(frozen=True)
class NormClass:
    plus: Verdict = Verdict.INCONCLUSIVE
    minus: Verdict = Verdict.INCONCLUSIVE

    @property
    def decided(self) -> bool:
        return Verdict.INCONCLUSIVE not in (self.plus, self.minus)

    @property
    def both(self) -> bool:
        return self.plus is Verdict.YES and self.minus is Verdict.YES

    @property
    def one_sided(self) -> bool:
        return (self.plus is Verdict.YES) != (self.minus is Verdict.YES) and self.decided

    def at(self, direction: Union[str, Direction]) -> Verdict:
        return self.plus if Direction(direction) is Direction.UP else self.minus


@dataclass(frozen=True, eq=False)
class FormalSolution:
    """A sampled (psi, psi') with its chain order and construction data.

    `reach` holds the trusted |x| extent on the (minus, plus) side; 0 marks an
    uncovered side. `seed` is the outer end the construction started from.
    """

    order: int
    lam: SpectralValue
    direction: Direction
    kind: Kind
    traj: ComplexTrajectory
    reach: Tuple[float, float]
    norm: NormClass = field(default_factory=NormClass)
    seed: Optional[float] = None
    expr: Optional[sp.Expr] = None
    label: str = ""

    def __call__(self, x):
        return self.traj(x)

    @property
    def norm_plus(self) -> Verdict:
        return self.norm.plus

    @property
    def norm_minus(self) -> Verdict:
        return self.norm.minus

    @property
    def interval(self) -> Tuple[float, float]:
        return self.traj.interval

    def with_norm(self, norm: NormClass) -> "FormalSolution":
        return replace(self, norm=norm)

    def to_csv(self, path: Path, extra: Optional[dict] = None) -> Path:
        return self.traj.to_csv(path, extra)

    @classmethod
    def from_expression(cls, expr: Union[sp.Expr, str], lam: Union[SpectralValue, complex], reach: float,
                        order: int = 0, kind: Kind = Kind.GROWING, direction: Direction = Direction.UP,
                        gap: float = 0.0, n: int = None, label: str = "") -> "FormalSolution":
        """Closed-form solution sampled on [-reach, -gap] U [gap, reach]."""
        expr = sp.sympify(expr, locals={"x": X}) if isinstance(expr, str) else expr
        if not isinstance(lam, SpectralValue):
            lam = SpectralValue(complex(lam))
        value = sp.lambdify(X, expr, "numpy")
        slope = sp.lambdify(X, sp.diff(expr, X), "numpy")

        def dense(x):
            x = np.asarray(x, dtype=float)
            return (np.asarray(value(x) + 0j * x, dtype=complex),
                    np.asarray(slope(x) + 0j * x, dtype=complex))

        n = n or settings.GRID_POINTS
        if gap > 0:
            ray = np.linspace(gap, reach, n)
            xs = np.concatenate([-ray[::-1], ray])
        else:
            xs = np.linspace(-reach, reach, 2 * n)
        traj = sample(dense, xs, 0.0)
        return cls(order=order, lam=lam, direction=direction, kind=kind, traj=traj,
                   reach=(reach, reach), expr=expr, label=label or str(expr))


def mirror(sol: FormalSolution) -> FormalSolution:
    """The same construction seen through x -> -x; direction flips."""
    inner = sol.traj

    def dense(x):
        psi, dpsi = inner(-np.asarray(x, dtype=float))
        return psi, -dpsi

    xs = -inner.grid.abscissas[::-1]
    traj = ComplexTrajectory(grid=Grid(xs, "both"), psi=inner.psi[::-1], dpsi=-inner.dpsi[::-1],
                             tol_achieved=inner.tol_achieved, dense=dense)
    flipped = Direction.DOWN if sol.direction is Direction.UP else Direction.UP
    norm = NormClass(plus=sol.norm.minus, minus=sol.norm.plus)
    expr = sol.expr.subs(X, -X) if sol.expr is not None else None
    return replace(sol, direction=flipped, traj=traj, reach=(sol.reach[1], sol.reach[0]),
                   norm=norm, expr=expr)


def trusted_span(sol: FormalSolution) -> Tuple[float, float]:
    """The part of the sampled interval inside the trusted reach; an uncovered side keeps its sampled end."""
    lo, hi = sol.interval
    if sol.reach[0] > 0:
        lo = max(lo, -sol.reach[0])
    if sol.reach[1] > 0:
        hi = min(hi, sol.reach[1])
    return lo, hi


def in_direction(sol: FormalSolution, direction: Union[str, Direction]) -> FormalSolution:
    """Mirror `sol` when its direction differs from `direction`."""
    return sol if sol.direction is Direction(direction) else mirror(sol)


def extend_to_axis(sol: FormalSolution, profile: PotentialProfile, rho: Optional[FormalSolution] = None,
                   tol: float = None) -> FormalSolution:
    """Continue an up-built solution leftward through the origin to -reach.

    Leftward is the growing direction for every solution that is not
    normalizable at -infinity, so the continuation stays accurate.
    `rho` must already be extended when given.
    """
    start, top = sol.interval
    hi = min(sol.reach[1], profile.Xmax)
    source = None if rho is None else (lambda x: rho(x)[0])
    ext = integrate_schrodinger(profile, sol.lam.value, source, (start, -hi), sol(start), tol)
    dense = piecewise([(start, top, sol.traj.dense), (-hi, start, ext.dense)])
    left = ext.grid.abscissas[ext.grid.abscissas < start]
    traj = sample(dense, np.concatenate([left, sol.traj.grid.abscissas]), ext.tol_achieved)
    logger.debug(f"Extended order-{sol.order} solution at lambda={sol.lam} to [{-hi:g}, {top:g}]")
    return replace(sol, traj=traj, reach=(hi, sol.reach[1]))


def _side_verdict(sol: FormalSolution, profile: PotentialProfile, direction: Direction) -> Verdict:
    reach = sol.reach[1] if direction is Direction.UP else sol.reach[0]
    inner = max(profile.R0, 0.5 * reach)
    if reach <= profile.R0 or reach - inner < 1e-6 * reach:
        return Verdict.INCONCLUSIVE
    t = np.geomspace(inner, reach, _CLASSIFIER_SAMPLES)
    x = direction.sign * t
    psi = np.asarray(sol(x)[0])
    if not np.all(np.abs(psi) > 0):
        return Verdict.INCONCLUSIVE
    log_abs = np.log(np.abs(psi))
    tail = fit_log_tail(t, 2.0 * log_abs)
    slope = float(np.polyfit(xi_abs(x, profile, direction), log_abs, 1)[0])
    if slope <= -INCONCLUSIVE_BAND and tail.converges:
        return Verdict.YES
    if slope >= INCONCLUSIVE_BAND and not tail.converges:
        return Verdict.NO
    logger.warning(f"Inconclusive verdict for order-{sol.order} solution at {direction.value} "
                   f"(slope {slope:.3f}, tail {tail.model} {tail.exponent:.3f})")
    return Verdict.INCONCLUSIVE


def classify_normalizability(sol: Union[FormalSolution, ComplexTrajectory], profile: PotentialProfile) -> NormClass:
    """Verdict per infinity from a tail fit of |psi|^2 and the slope of log|psi| against xi."""
    if isinstance(sol, ComplexTrajectory):
        lo, hi = sol.interval
        sol = FormalSolution(order=0, lam=SpectralValue(0j), direction=Direction.UP, kind=Kind.DECAYING,
                             traj=sol, reach=(max(-lo, 0.0), max(hi, 0.0)))
    return NormClass(plus=_side_verdict(sol, profile, Direction.UP),
                     minus=_side_verdict(sol, profile, Direction.DOWN))


def classified(sol: FormalSolution, profile: PotentialProfile) -> FormalSolution:
    return sol.with_norm(classify_normalizability(sol, profile))


def proportionality(a: np.ndarray, b: np.ndarray) -> Tuple[complex, float]:
    """Least-squares c with a ~ c b, weighted relative to |a|, and the max relative deviation."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    w = 1.0 / np.maximum(np.abs(a), 1e-300)
    c = np.vdot(b * w, a * w) / np.vdot(b * w, b * w)
    return complex(c), float(np.max(np.abs(a - c * b) * w))


def projection_residual(target: np.ndarray, basis: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
    """Least-squares coefficients of target over basis columns, relative to |target|."""
    target = np.asarray(target, dtype=complex)
    w = 1.0 / np.maximum(np.abs(target), 1e-300)
    matrix = np.column_stack([np.asarray(b, dtype=complex) * w for b in basis])
    coeffs, *_ = np.linalg.lstsq(matrix, target * w, rcond=None)
    return coeffs, float(np.max(np.abs(matrix @ coeffs - target * w)))
