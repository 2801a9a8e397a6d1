"""Spectral values, branch selection and the alpha/xi/eta functionals."""
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy.optimize import brentq

from config.constants import BRANCH_CUT_TOL
from config.settings import settings
from potential.expression import parse_complex
from potential.profile import PotentialProfile
from quadrature.gauss import cumulative_integral
from utils.errors import AdmissibilityError, BranchContextError, BranchError
from utils.logging import logger

ArrayLike = Union[float, complex, np.ndarray]


class Direction(str, Enum):
    UP = "up"
    DOWN = "down"

    @property
    def sign(self) -> float:
        return 1.0 if self is Direction.UP else -1.0


@dataclass(frozen=True)
class SpectralValue:
    value: complex

    @classmethod
    def parse(cls, text: Union[str, complex, float]) -> "SpectralValue":
        if isinstance(text, (int, float, complex)):
            return cls(complex(text))
        return cls(parse_complex(text))

    @property
    def admissible(self) -> bool:
        lam = self.value
        return (lam.imag == 0 and lam.real <= 0) or lam.imag != 0

    def require_admissible(self) -> "SpectralValue":
        if not self.admissible:
            raise AdmissibilityError(f"lambda={self} is real and positive")
        return self

    def __str__(self) -> str:
        lam = self.value
        if lam.imag == 0:
            return f"{lam.real:g}"
        return f"{lam.real:g}{lam.imag:+g}i"


@dataclass(frozen=True)
class BranchContext:
    lam: SpectralValue
    R1: float
    R2: float

    @property
    def value(self) -> complex:
        return self.lam.value


def branch_power(z: ArrayLike, kappa: float) -> ArrayLike:
    """Principal-branch z**kappa with arg z in (-pi, pi); the cut is refused."""
    arr = np.asarray(z, dtype=complex)
    arg = np.angle(arr)
    if np.any(np.abs(arg) >= np.pi - BRANCH_CUT_TOL):
        raise BranchError(f"argument on the branch cut (arg = +-pi) for power {kappa}")
    with np.errstate(divide="ignore"):
        out = np.exp(kappa * (np.log(np.abs(arr)) + 1j * arg))
    return out if arr.ndim else complex(out)


def _ratio_excess(profile: PotentialProfile, bound: float):
    def excess(x):
        vals = np.asarray(profile.v(x))
        return np.abs(vals.imag) / np.abs(vals.real) - bound
    return excess


def compute_R2(profile: PotentialProfile, lam: SpectralValue, n: int = None) -> BranchContext:
    """Branch radius for lam; R1 = R0 for real non-positive lam."""
    lam.require_admissible()
    value = lam.value
    if value.imag == 0 or value.real == 0:
        r = profile.R0
    else:
        bound = 0.5 * abs(value.imag) / abs(value.real)
        excess = _ratio_excess(profile, bound)
        r = profile.R0
        ray = np.geomspace(profile.R0, profile.Xmax, n or settings.GRID_POINTS)
        for sign in (1.0, -1.0):
            bad = np.nonzero(excess(sign * ray) > 0)[0]
            if bad.size == 0:
                continue
            last = bad[-1]
            if last == ray.size - 1:
                raise BranchContextError(f"branch context unavailable within Xmax={profile.Xmax:g} for lambda={lam}")
            crossing = brentq(lambda t: excess(sign * t), ray[last], ray[last + 1], xtol=1e-13)
            r = max(r, float(crossing))
    ctx = BranchContext(lam=lam, R1=r, R2=r)
    check_branch(profile, ctx)
    logger.debug(f"{profile.label}: lambda={lam} R1=R2={r:.10g}")
    return ctx


def check_branch(profile: PotentialProfile, ctx: BranchContext, n: int = None) -> None:
    """Raise BranchError unless |arg(V - lam)| < pi on the grid beyond R1."""
    xs = np.geomspace(ctx.R1, profile.Xmax, n or settings.GRID_POINTS)
    for sign in (1.0, -1.0):
        branch_power(np.asarray(profile.v(sign * xs)) - ctx.value, 0.5)


def alpha(x: ArrayLike, ctx: BranchContext, profile: PotentialProfile) -> ArrayLike:
    f = np.asarray(profile.v(x)) - ctx.value
    return (5.0 / 16.0) * np.asarray(profile.d1(x)) ** 2 / branch_power(f, 2.5) \
        - 0.25 * np.asarray(profile.d2(x)) / branch_power(f, 1.5)


def hat_alpha(x: ArrayLike, ctx: BranchContext, profile: PotentialProfile) -> ArrayLike:
    f = np.abs(np.asarray(profile.v(x)) - ctx.value)
    return (5.0 / 16.0) * np.abs(np.asarray(profile.d1(x))) ** 2 / f ** 2.5 \
        + 0.25 * np.abs(np.asarray(profile.d2(x))) / f ** 1.5


def _on_ray(profile: PotentialProfile, direction: Union[str, Direction], integrand):
    sign = Direction(direction).sign
    return sign, (lambda t: integrand(sign * np.asarray(t)))


def xi(x: ArrayLike, ctx: BranchContext, profile: PotentialProfile,
       direction: Union[str, Direction] = "up", tol: float = None) -> ArrayLike:
    """+-int_{+-R1}^x sqrt(V - lam), measured outward along the ray."""
    sign, f = _on_ray(profile, direction,
                      lambda t: branch_power(np.asarray(profile.v(t)) - ctx.value, 0.5))
    out = cumulative_integral(f, ctx.R1, sign * np.atleast_1d(np.asarray(x, dtype=float)),
                              tol or settings.QUAD_TOL)
    return out if np.ndim(x) else complex(out[0])


def xi_abs(x: ArrayLike, profile: PotentialProfile, direction: Union[str, Direction] = "up",
           tol: float = None) -> ArrayLike:
    sign, f = _on_ray(profile, direction, lambda t: np.sqrt(np.abs(np.asarray(profile.v(t)))))
    out = cumulative_integral(f, profile.R0, sign * np.atleast_1d(np.asarray(x, dtype=float)),
                              tol or settings.QUAD_TOL).real
    return out if np.ndim(x) else float(out[0])


def eta(x: ArrayLike, profile: PotentialProfile, direction: Union[str, Direction] = "up",
        tol: float = None) -> ArrayLike:
    sign, f = _on_ray(profile, direction, lambda t: 1.0 / np.sqrt(np.abs(np.asarray(profile.v(t)))))
    out = cumulative_integral(f, profile.R0, sign * np.atleast_1d(np.asarray(x, dtype=float)),
                              tol or settings.QUAD_TOL).real
    return out if np.ndim(x) else float(out[0])
