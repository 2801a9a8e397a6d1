"""Symmetry of h under the bilinear form int f g dx (no complex conjugation)."""
from typing import Tuple

import numpy as np
import sympy as sp
from scipy.integrate import simpson

from potential.expression import X
from potential.profile import PotentialProfile
from quadrature.ode import fd_step, second_derivative
from solutions.formal import FormalSolution, trusted_span
from utils.errors import NotNormalizableError
from utils.logging import logger

_SAMPLES = 4001


def second_derivative_of(sol: FormalSolution, profile: PotentialProfile, x: np.ndarray) -> np.ndarray:
    """psi'' exactly for closed-form solutions, by differencing psi' otherwise."""
    if sol.expr is not None:
        d2 = sp.lambdify(X, sp.diff(sol.expr, X, 2), "numpy")
        return np.asarray(d2(x) + 0j * x, dtype=complex)
    return second_derivative(sol.traj, x, fd_step(profile, sol.lam.value, x))


def apply_h(sol: FormalSolution, profile: PotentialProfile, x: np.ndarray) -> np.ndarray:
    """-psi'' + V psi."""
    return -second_derivative_of(sol, profile, x) + np.asarray(profile.v(x)) * np.asarray(sol(x)[0])


def _common_span(a: FormalSolution, b: FormalSolution) -> Tuple[float, float]:
    lo = max(trusted_span(a)[0], trusted_span(b)[0])
    hi = min(trusted_span(a)[1], trusted_span(b)[1])
    margin = 0.03 * max(1.0, abs(lo), abs(hi))
    return lo + margin, hi - margin


def bilinear_symmetry_check(psi1: FormalSolution, psi2: FormalSolution, profile: PotentialProfile,
                            n: int = _SAMPLES) -> float:
    """|int (h psi1) psi2 - int psi1 (h psi2)| / (||psi1|| ||psi2||) over the common trusted interval."""
    for name, psi in (("psi1", psi1), ("psi2", psi2)):
        if not psi.norm.both:
            raise NotNormalizableError(f"{name} ({psi.label}) is not normalizable on the whole axis "
                                       f"(+inf: {psi.norm.plus.value}, -inf: {psi.norm.minus.value})")
    lo, hi = _common_span(psi1, psi2)
    x = np.linspace(lo, hi, n)
    f1, f2 = np.asarray(psi1(x)[0]), np.asarray(psi2(x)[0])
    h1, h2 = apply_h(psi1, profile, x), apply_h(psi2, profile, x)
    gap = abs(simpson(h1 * f2 - f1 * h2, x=x))
    norms = np.sqrt(simpson(np.abs(f1) ** 2, x=x) * simpson(np.abs(f2) ** 2, x=x))
    residual = float(gap / norms)
    logger.debug(f"Bilinear symmetry of {psi1.label} and {psi2.label} on [{lo:.4g}, {hi:.4g}]: {residual:.3e}")
    return residual
