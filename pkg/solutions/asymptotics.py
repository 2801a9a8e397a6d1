"""Leading-order asymptotic models of chain members and the ratio tests against them."""
from dataclasses import dataclass
from math import factorial
from typing import Tuple, Union

import numpy as np

from config.constants import SLOPE_MARGIN
from config.settings import settings
from potential.branch import BranchContext, Direction, branch_power, eta, xi, xi_abs
from potential.estimates import is_bounded
from potential.profile import PotentialProfile, oriented
from quadrature.functionals import Variant
from quadrature.gauss import cumulative_integral
from quadrature.improper import decay_exponent, improper_integral
from solutions.formal import FormalSolution, Kind
from solutions.zero_modes import trust_bottom
from utils.logging import logger

ArrayLike = Union[float, np.ndarray]

_WINDOW_SAMPLES = 96


def _inverse_root(p: PotentialProfile, ctx: BranchContext):
    return lambda t: 1.0 / branch_power(np.asarray(p.v(t)) - ctx.value, 0.5)


def tail_half_integral(p: PotentialProfile, ctx: BranchContext, t: ArrayLike, tol: float = None) -> ArrayLike:
    """M(t) = int_t^inf dx / sqrt(V - lam) on the oriented profile; convergent variant only."""
    tol = tol or settings.QUAD_TOL
    g = _inverse_root(p, ctx)
    tail = improper_integral(g, p.Xmax, "up", tol).value
    values = tail - cumulative_integral(g, p.Xmax, np.atleast_1d(np.asarray(t, dtype=float)), tol)
    return values if np.ndim(t) else complex(values[0])


def half_integral(p: PotentialProfile, ctx: BranchContext, t: ArrayLike, variant: Variant,
                  tol: float = None) -> ArrayLike:
    """The J entering the order-n factors: -M(t) when convergent, int_{R1}^t dx/sqrt(V - lam) otherwise."""
    if variant is Variant.CONVERGENT:
        return -tail_half_integral(p, ctx, t, tol)
    values = cumulative_integral(_inverse_root(p, ctx), ctx.R1, np.atleast_1d(np.asarray(t, dtype=float)),
                                 tol or settings.QUAD_TOL)
    return values if np.ndim(t) else complex(values[0])


@dataclass(frozen=True, eq=False)
class AsymptoticModel:
    """(1/n!) (V - lam)^(-1/4) (s J)^n e^(-+xi), s = 1/2 decaying and -1/2 growing."""

    profile: PotentialProfile
    ctx: BranchContext
    direction: Direction
    kind: Kind
    variant: Variant
    n: int

    @property
    def oriented(self) -> PotentialProfile:
        return oriented(self.profile, self.direction.value)

    def _pieces(self, x: ArrayLike):
        t = self.direction.sign * np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(t < self.ctx.R1 * (1 - 1e-12)):
            raise ValueError(f"asymptotic model needs |x| >= R1 = {self.ctx.R1:g}")
        p = self.oriented
        f = np.asarray(p.v(t)) - self.ctx.value
        s = 0.5 if self.kind is Kind.DECAYING else -0.5
        factor = (s * half_integral(p, self.ctx, t, self.variant)) ** self.n / factorial(self.n) \
            if self.n else np.ones(t.shape)
        sign = -1.0 if self.kind is Kind.DECAYING else 1.0
        exponential = np.exp(sign * xi(t, self.ctx, p))
        return f, factor * exponential, sign


def evaluate_asymptotic(model: AsymptoticModel, x: ArrayLike) -> ArrayLike:
    f, rest, _ = model._pieces(x)
    values = branch_power(f, -0.25) * rest
    return values if np.ndim(x) else complex(values[0])


def evaluate_asymptotic_derivative(model: AsymptoticModel, x: ArrayLike) -> ArrayLike:
    """Leading term of psi': -+ (V - lam)^(1/4) (s J)^n e^(-+xi) / n!, in the caller's x."""
    f, rest, sign = model._pieces(x)
    values = model.direction.sign * sign * branch_power(f, 0.25) * rest
    return values if np.ndim(x) else complex(values[0])


def model_for(sol: FormalSolution, profile: PotentialProfile, ctx: BranchContext, variant: Variant) -> AsymptoticModel:
    return AsymptoticModel(profile=profile, ctx=ctx, direction=sol.direction, kind=sol.kind,
                           variant=variant, n=sol.order)


def asymptotic_deviation(sol: FormalSolution, model: AsymptoticModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """|psi/asym - 1| and |psi'/asym' - 1|."""
    psi, dpsi = sol(x)
    value = np.abs(np.asarray(psi) / evaluate_asymptotic(model, x) - 1.0)
    slope = np.abs(np.asarray(dpsi) / evaluate_asymptotic_derivative(model, x) - 1.0)
    return value, slope


@dataclass(frozen=True)
class AsymptoticReport:
    order: int
    kind: str
    variant: str
    window: Tuple[float, float]
    value_statistic: float
    derivative_statistic: float
    passed: bool


def asymptotic_ratio_test(sol: FormalSolution, profile: PotentialProfile, ctx: BranchContext,
                          variant: Variant) -> AsymptoticReport:
    """Slope of the deviation against 1 + xi (convergent) or boundedness against ln(e + eta)/(1 + eta).

    The convergent test uses [2 R1, reach/2]; the divergent one the whole
    trusted ray from 2 R1. Growing members start no lower than where the
    decaying admixture picked up at their base has died out.
    """
    model = model_for(sol, profile, ctx, variant)
    sign = sol.direction.sign
    reach = sol.reach[1] if sol.direction is Direction.UP else sol.reach[0]
    start = abs(sol.interval[0] if sign > 0 else sol.interval[1])
    if sol.kind is Kind.GROWING:
        start = trust_bottom(model.oriented, ctx, start)
    lo = max(2.0 * ctx.R1, start)
    hi = 0.5 * reach if variant is Variant.CONVERGENT else reach
    if hi <= lo:
        logger.warning(f"Order-{sol.order} {sol.kind.value} solution has no room for an asymptotic window")
        return AsymptoticReport(order=sol.order, kind=sol.kind.value, variant=variant.value, window=(lo, hi),
                                value_statistic=float("nan"), derivative_statistic=float("nan"), passed=False)
    t = np.geomspace(lo, hi, _WINDOW_SAMPLES)
    x = sign * t
    dev, ddev = asymptotic_deviation(sol, model, x)

    if variant is Variant.CONVERGENT:
        w = 1.0 + xi_abs(x, profile, sol.direction)
        stats = [decay_exponent(np.maximum(d, 1e-300), w) for d in (dev, ddev)]
        passed = all(s <= -1.0 + SLOPE_MARGIN for s in stats)
    else:
        e = eta(x, profile, sol.direction)
        w = np.log(np.e + e) / (1.0 + e)
        ratios = [d / w for d in (dev, ddev)]
        stats = [float(np.max(r)) for r in ratios]
        passed = all(is_bounded(r) for r in ratios)
    if not passed:
        logger.warning(f"Order-{sol.order} {sol.kind.value} solution fails the {variant.value} asymptotic "
                       f"ratio test on [{lo:.4g}, {hi:.4g}] ({stats[0]:.3g}, {stats[1]:.3g})")
    return AsymptoticReport(order=sol.order, kind=sol.kind.value, variant=variant.value, window=(float(lo), float(hi)),
                            value_statistic=float(stats[0]), derivative_statistic=float(stats[1]), passed=passed)
