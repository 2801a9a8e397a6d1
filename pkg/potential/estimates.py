"""Grid-certified estimates for admissible spectral values."""
from dataclasses import dataclass

import numpy as np

from config.constants import BOUNDED_FACTOR, BRANCH_JUMP_LIMIT
from config.settings import settings
from potential.branch import BranchContext, branch_power, xi_abs
from potential.expression import PotentialExpr, differentiate
from potential.profile import PotentialProfile
from utils.logging import logger


@dataclass(frozen=True)
class Lemma5Report:
    lam: complex
    R1: float
    C1_hat: float
    C2_hat: float
    C3_hat: float
    corollary1_inner_max: float
    corollary1_outer_max: float
    corollary1_bounded: bool
    branch_continuous: bool
    max_arg_jump: float
    passed: bool
    label: str = "grid-certified"


def is_bounded(values: np.ndarray, factor: float = BOUNDED_FACTOR) -> bool:
    """Outer-half maximum within `factor` of the inner-half maximum."""
    values = np.abs(np.asarray(values, dtype=float))
    if not np.isfinite(values).all():
        return False
    half = values.size // 2
    return bool(values[half:].max() <= factor * values[:half].max() + 1e-300)


def lemma5_suite(profile: PotentialProfile, ctx: BranchContext, n: int = None) -> Lemma5Report:
    """Empirical constants of the |V|/|V - lam| and Re sqrt(V - lam) estimates."""
    n = n or settings.GRID_POINTS
    ray = np.geomspace(ctx.R1, profile.Xmax, n)
    c1, c2, c3 = np.inf, 0.0, np.inf
    inner_max, outer_max, bounded, jump = 0.0, 0.0, True, 0.0

    for sign, direction in ((1.0, "up"), (-1.0, "down")):
        x = sign * ray
        v = np.asarray(profile.v(x))
        f = v - ctx.value
        ratio = np.abs(v) ** 2 / np.abs(f) ** 2
        c1 = min(c1, float(ratio.min()))
        c2 = max(c2, float(ratio.max()))
        root = branch_power(f, 0.5)
        c3 = min(c3, float((root.real / np.sqrt(np.abs(v))).min()))

        g = np.abs(np.asarray(profile.d1(x))) / np.abs(f) ** 1.5 * xi_abs(x, profile, direction)
        half = g.size // 2
        inner_max = max(inner_max, float(g[:half].max()))
        outer_max = max(outer_max, float(g[half:].max()))
        bounded = bounded and is_bounded(g)

        jump = max(jump, float(np.abs(np.diff(np.unwrap(np.angle(f)))).max()))

    continuous = jump < BRANCH_JUMP_LIMIT
    if not continuous:
        logger.warning(f"{profile.label}: arg(V - lambda) jumps by {jump:.3f} between grid points, refine the grid")
    passed = bool(c1 > 0 and np.isfinite(c2) and c3 > 0 and bounded and continuous)
    return Lemma5Report(
        lam=ctx.value, R1=ctx.R1, C1_hat=c1, C2_hat=c2, C3_hat=c3,
        corollary1_inner_max=inner_max, corollary1_outer_max=outer_max,
        corollary1_bounded=bounded, branch_continuous=continuous, max_arg_jump=jump,
        passed=passed,
    )


def linearity_gap(a: complex, f: PotentialExpr, g: PotentialExpr, xs: np.ndarray) -> float:
    """Max |D(a f + g) - (a D f + D g)| relative to the result, sampled at xs."""
    combined = differentiate(PotentialExpr(a * f.root + g.root))
    expected = a * np.asarray(differentiate(f)(xs)) + np.asarray(differentiate(g)(xs))
    got = np.asarray(combined(xs))
    return float(np.max(np.abs(got - expected) / np.maximum(np.abs(expected), 1e-12)))
