"""Potential profiles and grid validation of class membership."""
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config.constants import BOUNDED_FACTOR, MIN_SIDE_POINTS
from config.settings import settings
from potential.expression import PotentialExpr, X, differentiate, fd_relative_error
from quadrature.gauss import cumulative_integral
from quadrature.grid import Grid
from utils.errors import EvaluationError, GridTooCoarseError
from utils.logging import logger

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PotentialProfile:
    """Evaluators for V, V', V'' plus class metadata.

    Built either from an expression (symbolic derivatives of any order) or
    from plain callables (numeric path, derivatives up to second order).
    """

    v: Evaluator
    d1: Evaluator
    d2: Evaluator
    R0: float
    eps: float
    C: float
    Xmax: float
    expr: Optional[PotentialExpr] = None
    label: str = ""
    _higher: Dict[int, Evaluator] = field(default_factory=dict, repr=False)

    @classmethod
    def from_expression(cls, expr: PotentialExpr, R0: float, eps: float,
                        Xmax: Optional[float] = None, check_derivatives: bool = True) -> "PotentialProfile":
        Xmax = Xmax if Xmax is not None else settings.XMAX_FACTOR * R0
        d1 = differentiate(expr)
        d2 = differentiate(d1)
        if check_derivatives:
            xs = np.concatenate([np.linspace(R0, Xmax, 50), -np.linspace(R0, Xmax, 50)])
            err = max(fd_relative_error(expr, d1, xs), fd_relative_error(d1, d2, xs))
            if err > 1e-6:
                raise EvaluationError(f"symbolic derivative of {expr.text} disagrees with finite differences ({err:.2e})")
        profile = cls(v=expr, d1=d1, d2=d2, R0=R0, eps=eps, C=0.0, Xmax=Xmax, expr=expr, label=expr.text)
        return replace(profile, C=profile.imag_ratio_sup())

    def derivative(self, order: int) -> Evaluator:
        """Evaluator of the order-th derivative of V."""
        if order == 0:
            return self.v
        if order == 1:
            return self.d1
        if order == 2:
            return self.d2
        if self.expr is None:
            raise ValueError(f"numeric profile {self.label} has no derivative of order {order}")
        if order not in self._higher:
            self._higher[order] = differentiate(self.expr, order)
        return self._higher[order]

    def imag_ratio_sup(self, n: int = 256) -> float:
        xs = Grid.geometric(self.R0, self.Xmax, n).abscissas
        vals = np.asarray(self.v(xs))
        re = np.abs(vals.real)
        ratio = np.where(re > 0, np.abs(vals.imag) / np.where(re > 0, re, 1.0), np.inf)
        return float(ratio.max())

    def reflected(self) -> "PotentialProfile":
        """The profile of V(-x); derivatives pick up the chain-rule signs."""
        if self.expr is not None:
            expr = PotentialExpr(self.expr.root.subs(X, -X))
            return PotentialProfile.from_expression(expr, self.R0, self.eps, self.Xmax,
                                                    check_derivatives=False)
        v, d1, d2 = self.v, self.d1, self.d2
        return replace(
            self,
            v=lambda x: v(-np.asarray(x)),
            d1=lambda x: -np.asarray(d1(-np.asarray(x))),
            d2=lambda x: d2(-np.asarray(x)),
            label=f"{self.label} reflected",
            _higher={},
        )

    def default_grid(self, n: Optional[int] = None, side: str = "both") -> Grid:
        return Grid.geometric(self.R0, self.Xmax, n or settings.GRID_POINTS, side)


def oriented(profile: PotentialProfile, direction: str) -> PotentialProfile:
    """Profile in which `direction` points toward +infinity."""
    return profile if direction == "up" else profile.reflected()


def xi_abs_on_ray(profile: PotentialProfile, ray: np.ndarray) -> np.ndarray:
    """int_{R0}^{|x|} sqrt|V| along a ray given in outward order (signed abscissas)."""
    sign = 1.0 if ray[0] > 0 else -1.0
    f = lambda t: np.sqrt(np.abs(np.asarray(profile.v(sign * t))))
    return cumulative_integral(f, profile.R0, np.abs(ray)).real


@dataclass(frozen=True)
class KReport:
    passed: bool
    eps_hat: float
    C_hat: float
    cond4_sup: float
    growth_gamma: float
    growth_C0: float
    growth_xi0: float
    failures: List[Tuple[str, float]]
    smoothness: str = "by construction"


def validate_class(profile: PotentialProfile, grid: Grid) -> KReport:
    """Grid-certify items 2-4 of the class definition and fit the growth bound."""
    if grid.points_per_side() < MIN_SIDE_POINTS:
        raise GridTooCoarseError(
            f"grid has {grid.points_per_side()} points per side, need at least {MIN_SIDE_POINTS}"
        )
    failures: List[Tuple[str, float]] = []
    eps_hat, c_hat, cond4, gammas, c0s = np.inf, 0.0, 0.0, [], []

    for ray in (grid.plus, grid.minus[::-1]):
        ray = ray[np.abs(ray) >= profile.R0 * (1 - 1e-12)]
        if ray.size == 0:
            continue
        try:
            v = np.asarray(profile.v(ray))
            d1 = np.asarray(profile.d1(ray))
            d2 = np.asarray(profile.d2(ray))
        except EvaluationError as e:
            logger.error(f"Evaluation failed while validating {profile.label}: {e}")
            raise

        re = v.real
        eps_hat = min(eps_hat, float(re.min()))
        low = np.nonzero(re < profile.eps)[0]
        if low.size:
            failures.append(("2", float(ray[low[0]])))
            continue

        ratio = np.abs(v.imag) / re
        c_hat = max(c_hat, float(ratio.max()))
        outer = ratio[ray.size // 2:]
        if outer.max() > 1e-12 * max(1.0, ratio.max()):
            # o(1): the ratio must fall off across the outer half
            slope = np.polyfit(np.log(np.abs(ray[ray.size // 2:])), np.log(np.maximum(outer, 1e-300)), 1)[0]
            if slope > -0.25:
                failures.append(("3", float(ray[ray.size // 2 + int(np.argmax(outer))])))

        xi = xi_abs_on_ray(profile, ray)
        absv = np.abs(v)
        quantity = xi ** 2 * (np.abs(d1) ** 2 / absv ** 3 + np.abs(d2) / absv ** 2)
        cond4 = max(cond4, float(quantity.max()))
        half = ray.size // 2
        if not np.isfinite(quantity).all() or quantity[half:].max() > BOUNDED_FACTOR * quantity[:half].max():
            failures.append(("4", float(ray[half + int(np.argmax(quantity[half:]))])))

        w = np.log(1.0 + xi)
        gamma = float(np.polyfit(w, np.log(absv), 1)[0])
        gammas.append(gamma)
        c0s.append(float(np.max(absv / (1.0 + xi) ** gamma)))

    report = KReport(
        passed=not failures,
        eps_hat=float(eps_hat),
        C_hat=float(c_hat),
        cond4_sup=float(cond4),
        growth_gamma=max(gammas) if gammas else float("nan"),
        growth_C0=max(c0s) if c0s else float("nan"),
        growth_xi0=1.0,
        failures=failures,
    )
    if report.passed:
        logger.info(f"{profile.label}: class check passed (eps_hat={report.eps_hat:.4g}, C_hat={report.C_hat:.4g})")
    else:
        logger.warning(f"{profile.label}: class check failed {report.failures}")
    return report
