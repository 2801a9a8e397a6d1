"""The I1/I2/I3 functionals, the integrability variant and their verification suites."""
from dataclasses import dataclass
from enum import Enum
from typing import List, Union

import numpy as np

from config.constants import (
    BOUNDED_FACTOR,
    SLOPE_MARGIN,
    VARIANT_CONVERGENT_BELOW,
    VARIANT_DIVERGENT_ABOVE,
)
from config.settings import settings
from potential.branch import BranchContext, Direction, branch_power, hat_alpha, xi_abs
from potential.profile import PotentialProfile, oriented
from quadrature.gauss import cumulative_integral
from quadrature.improper import (
    decay_exponent,
    doubling_windows,
    envelope_bounded,
    fit_tail,
    improper_integral,
)
from quadrature.ode import solve_linear
from utils.errors import VariantError
from utils.logging import logger

ArrayLike = Union[float, np.ndarray]

_TAIL_SAMPLES = 48


class Variant(str, Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"


def _ray_coordinates(x: ArrayLike, direction: Union[str, Direction]):
    sign = Direction(direction).sign
    return sign, sign * np.atleast_1d(np.asarray(x, dtype=float))


def _shape_like(x: ArrayLike, values: np.ndarray):
    return values if np.ndim(x) else float(values[0])


def tail_exponent(f, profile: PotentialProfile, direction: Union[str, Direction] = "up") -> float:
    """Power-law exponent of |f| over the last decade of the working ray."""
    sign = Direction(direction).sign
    t = np.geomspace(profile.Xmax / 10.0, profile.Xmax, _TAIL_SAMPLES)
    values = np.abs(np.asarray(f(sign * t)))
    return float(np.polyfit(np.log(t), np.log(np.maximum(values, 1e-300)), 1)[0])


def detect_variant(profile: PotentialProfile, direction: Union[str, Direction] = "up") -> Variant:
    """Convergent or divergent int dx/sqrt|V| at the given infinity."""
    exponent = tail_exponent(lambda x: 1.0 / np.sqrt(np.abs(np.asarray(profile.v(x)))), profile, direction)
    if exponent >= VARIANT_DIVERGENT_ABOVE:
        return Variant.DIVERGENT
    if exponent <= VARIANT_CONVERGENT_BELOW:
        return Variant.CONVERGENT
    raise VariantError(
        f"{profile.label}: tail exponent {exponent:.3f} of 1/sqrt|V| is too close to -1 to pick a variant"
    )


def I1(x: ArrayLike, ctx: BranchContext, profile: PotentialProfile,
       direction: Union[str, Direction] = "up", tol: float = None) -> ArrayLike:
    """+-int_x^{+-inf} hat_alpha."""
    tol = tol or settings.QUAD_TOL
    _, t = _ray_coordinates(x, direction)
    p = oriented(profile, Direction(direction).value)
    f = lambda s: hat_alpha(s, ctx, p)
    tail = improper_integral(f, p.Xmax, "up", tol).value.real
    inner = cumulative_integral(f, p.Xmax, t, tol).real
    return _shape_like(x, tail - inner)


def _re_root(p: PotentialProfile, ctx: BranchContext, s):
    return branch_power(np.asarray(p.v(s)) - ctx.value, 0.5).real


def I2(x: ArrayLike, ctx: BranchContext, profile: PotentialProfile,
       direction: Union[str, Direction] = "up", tol: float = None) -> ArrayLike:
    """+-int_x^{+-inf} hat_alpha(x1) exp(-2 Re(xi(x1) - xi(x)))."""
    tol = tol or settings.QUAD_TOL
    _, t = _ray_coordinates(x, direction)
    p = oriented(profile, Direction(direction).value)

    def rhs(s, y):
        return np.array([2.0 * _re_root(p, ctx, s) * y[0] - hat_alpha(s, ctx, p)])

    start = p.Xmax
    y0 = np.array([hat_alpha(start, ctx, p) / (2.0 * _re_root(p, ctx, start))])
    sol = solve_linear(rhs, start, float(t.min()), y0, tol, method="Radau")
    return _shape_like(x, sol.sol(t)[0])


def I3(x: ArrayLike, ctx: BranchContext, profile: PotentialProfile,
       direction: Union[str, Direction] = "up", tol: float = None) -> ArrayLike:
    """+-int_{+-R1}^x hat_alpha(x1) exp(-2 Re(xi(x) - xi(x1)))."""
    tol = tol or settings.QUAD_TOL
    _, t = _ray_coordinates(x, direction)
    p = oriented(profile, Direction(direction).value)
    if float(t.max()) <= ctx.R1:
        return _shape_like(x, np.zeros(t.shape))

    def rhs(s, y):
        return np.array([hat_alpha(s, ctx, p) - 2.0 * _re_root(p, ctx, s) * y[0]])

    sol = solve_linear(rhs, ctx.R1, float(t.max()), np.zeros(1), tol, atol=1e-14, method="Radau")
    values = np.where(t <= ctx.R1, 0.0, sol.sol(np.maximum(t, ctx.R1))[0])
    return _shape_like(x, values)


@dataclass(frozen=True)
class Lemma6Report:
    lam: complex
    direction: str
    window_edges: List[float]
    i1_xi: List[float]
    i2_xi2: List[float]
    i3_xi2: List[float]
    passed: bool
    samples: dict


def lemma6_suite(profile: PotentialProfile, ctx: BranchContext, direction: Union[str, Direction] = "up",
                 n: int = 96) -> Lemma6Report:
    """I1*xi, I2*xi^2, I3*xi^2 must keep a bounded envelope over three x-doubling windows."""
    direction = Direction(direction)
    end = profile.Xmax
    ray = np.geomspace(max(ctx.R1, end / 8.0), end, n)
    x = direction.sign * ray
    xi = xi_abs(x, profile, direction)
    q1 = I1(x, ctx, profile, direction) * xi
    q2 = I2(x, ctx, profile, direction) * xi ** 2
    q3 = I3(x, ctx, profile, direction) * xi ** 2

    maxima = [doubling_windows(ray, q, end) for q in (q1, q2, q3)]
    passed = all(envelope_bounded(m, BOUNDED_FACTOR) for m in maxima)
    if not passed:
        logger.warning(f"{profile.label}: I-functional envelope grows for lambda={ctx.lam} ({direction.value})")
    return Lemma6Report(
        lam=ctx.value,
        direction=direction.value,
        window_edges=[end / 8.0, end / 4.0, end / 2.0, end],
        i1_xi=maxima[0],
        i2_xi2=maxima[1],
        i3_xi2=maxima[2],
        passed=passed,
        samples={"x": x, "I1 xi": q1, "I2 xi^2": q2, "I3 xi^2": q3},
    )


@dataclass(frozen=True)
class Lemma7Report:
    lam: complex
    direction: str
    triggered: bool
    abs_integral_converges: bool
    growth_ratio: float
    a11_slope: float
    passed: bool


def lemma7_suite(profile: PotentialProfile, ctx: BranchContext,
                 direction: Union[str, Direction] = "up") -> Lemma7Report:
    """Consequences of a convergent int dx/sqrt(V - lam); vacuous when it diverges."""
    direction = Direction(direction)
    sign = direction.sign
    end = profile.Xmax
    t = np.geomspace(end / 10.0, end, _TAIL_SAMPLES)
    root_inv = 1.0 / branch_power(np.asarray(profile.v(sign * t)) - ctx.value, 0.5)
    triggered = fit_tail(t, root_inv).converges
    if not triggered:
        logger.debug(f"{profile.label}: int dx/sqrt(V - lambda) diverges, nothing to check")
        return Lemma7Report(lam=ctx.value, direction=direction.value, triggered=False,
                            abs_integral_converges=False, growth_ratio=float("nan"),
                            a11_slope=float("nan"), passed=True)

    inv_abs = lambda s: 1.0 / np.sqrt(np.abs(np.asarray(profile.v(sign * np.asarray(s)))))
    abs_converges = fit_tail(t, inv_abs(t)).converges

    v0 = abs(complex(profile.v(sign * profile.R0)))
    growth = float(np.abs(np.asarray(profile.v(sign * t))).min()) / v0

    ray = np.geomspace(profile.R0, end, 2 * _TAIL_SAMPLES)[_TAIL_SAMPLES:]
    tail = improper_integral(inv_abs, end, "up").value.real
    remaining = tail - cumulative_integral(inv_abs, end, ray).real
    xi = xi_abs(sign * ray, profile, direction)
    ratio = (1.0 / np.abs(np.asarray(profile.v(sign * ray)))) / (remaining / xi)
    slope = decay_exponent(ratio, 1.0 + xi)

    passed = bool(abs_converges and growth >= 10.0 and slope <= SLOPE_MARGIN)
    return Lemma7Report(lam=ctx.value, direction=direction.value, triggered=True,
                        abs_integral_converges=abs_converges, growth_ratio=growth,
                        a11_slope=slope, passed=passed)
