"""Verification suites for the zero modes and the associated chains."""
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from config.constants import SEED_I1_LIMIT, SLOPE_MARGIN
from config.settings import settings
from potential.branch import BranchContext, Direction, branch_power, xi_abs
from potential.profile import PotentialProfile, oriented
from quadrature.functionals import I1
from quadrature.improper import decay_exponent
from solutions.asymptotics import AsymptoticReport, asymptotic_ratio_test
from solutions.chains import (
    build_associated_chain,
    corollary4_check,
    corollary7_check,
    interior_points,
    ladder_check,
)
from solutions.formal import FormalSolution, Kind, Verdict, in_direction, proportionality, trusted_span
from solutions.zero_modes import (
    build_decaying_ode,
    build_decaying_series,
    build_growing,
    trust_bottom,
    wronskian,
)
from utils.logging import logger

_SAMPLES = 96

# Acceptance levels
SERIES_AGREEMENT = 1e-6
WRONSKIAN_TOL = 1e-6
PROPORTIONALITY_TOL = 1e-6
COMPLETENESS_TOL = 1e-5


def log_derivative_slope(sol: FormalSolution, profile: PotentialProfile, ctx: BranchContext, lo: float,
                         hi: float) -> float:
    """Decay slope of |psi'/psi - L| / |L| against 1 + xi, L = -+sqrt(V - lam) - V'/(4 (V - lam))."""
    up = in_direction(sol, Direction.UP)
    p = oriented(profile, sol.direction.value)
    t = np.geomspace(lo, hi, _SAMPLES)
    f = np.asarray(p.v(t)) - ctx.value
    sign = -1.0 if sol.kind is Kind.DECAYING else 1.0
    model = sign * branch_power(f, 0.5) - 0.25 * np.asarray(p.d1(t)) / f
    psi, dpsi = up(t)
    dev = np.abs(np.asarray(dpsi) / np.asarray(psi) - model) / np.abs(model)
    return decay_exponent(np.maximum(dev, 1e-300), 1.0 + xi_abs(t, p, "up"))


@dataclass(frozen=True)
class Lemma8Report:
    lam: complex
    direction: str
    seed: float
    series_vs_ode: float
    wronskian_dev: float
    decaying_slope: float
    growing_slope: float
    decaying_verdict: str
    growing_verdict: str
    proportionality_dev: float
    passed: bool


def lemma8_suite(profile: PotentialProfile, ctx: BranchContext, direction: Union[str, Direction] = "up",
                 seed_x: Optional[float] = None, tol: float = None) -> Lemma8Report:
    """Series against ODE, the Wronskian law, log-derivative asymptotics, verdicts and seed independence."""
    direction = Direction(direction)
    sign = direction.sign
    phi0 = build_decaying_ode(profile, ctx, direction, seed_x, tol)
    seed = phi0.seed
    series = build_decaying_series(profile, ctx, direction, 3, tol, seed_x=seed)
    hat0 = build_growing(phi0, profile, ctx, tol)

    t = np.linspace(max(ctx.R1, 0.5 * seed), seed, _SAMPLES)
    series_dev = float(np.max(np.abs(np.asarray(series(sign * t)[0]) / np.asarray(phi0(sign * t)[0]) - 1.0)))

    w = wronskian(hat0, phi0, interior_points(*trusted_span(hat0)))
    wronskian_dev = float(np.max(np.abs(w - 2.0)) / 2.0)

    reach = phi0.reach[1] if direction is Direction.UP else phi0.reach[0]
    decaying_slope = log_derivative_slope(phi0, profile, ctx, 2.0 * ctx.R1, 0.5 * reach)
    r3 = abs(hat0.interval[0] if sign > 0 else hat0.interval[1])
    bottom = trust_bottom(oriented(profile, direction.value), ctx, r3)
    growing_slope = log_derivative_slope(hat0, profile, ctx, max(2.0 * ctx.R1, bottom), 0.5 * seed)

    p = oriented(profile, direction.value)
    second_seed = 0.7 * seed
    if I1(second_seed, ctx, p, "up") >= SEED_I1_LIMIT:
        second_seed = 0.5 * (seed + second_seed)
    other = build_decaying_ode(profile, ctx, direction, second_seed, tol)
    lo = max(abs(trusted_span(phi0)[0 if sign > 0 else 1]), abs(trusted_span(other)[0 if sign > 0 else 1]))
    hi = min(phi0.reach[1 if sign > 0 else 0], other.reach[1 if sign > 0 else 0])
    t = np.linspace(lo, hi, _SAMPLES)
    _, prop_dev = proportionality(phi0(sign * t)[0], other(sign * t)[0])

    decaying_verdict = phi0.norm.at(direction)
    growing_verdict = hat0.norm.at(direction)
    passed = bool(
        series_dev <= SERIES_AGREEMENT
        and wronskian_dev <= WRONSKIAN_TOL
        and decaying_slope <= -2.0 + SLOPE_MARGIN
        and growing_slope <= -2.0 + SLOPE_MARGIN
        and decaying_verdict is Verdict.YES
        and growing_verdict is Verdict.NO
        and prop_dev <= PROPORTIONALITY_TOL
    )
    if not passed:
        logger.warning(f"{profile.label}: zero-mode suite failed at lambda={ctx.lam} ({direction.value})")
    return Lemma8Report(lam=ctx.value, direction=direction.value, seed=seed, series_vs_ode=series_dev,
                        wronskian_dev=wronskian_dev, decaying_slope=decaying_slope, growing_slope=growing_slope,
                        decaying_verdict=decaying_verdict.value, growing_verdict=growing_verdict.value,
                        proportionality_dev=prop_dev, passed=passed)


@dataclass(frozen=True)
class Lemma9Report:
    lam: complex
    direction: str
    variant: str
    n_max: int
    decaying_residuals: List[float]
    growing_residuals: List[float]
    asymptotics: List[AsymptoticReport]
    decaying_verdicts: List[str]
    growing_verdicts: List[str]
    monotone: bool
    completeness_residual: float
    ladder_passed: bool
    passed: bool


def lemma9_suite(profile: PotentialProfile, ctx: BranchContext, direction: Union[str, Direction] = "up",
                 n_max: int = 2, seed_x: Optional[float] = None, tol: float = None) -> Lemma9Report:
    """Chain links, asymptotic ratios, verdicts, monotonicity, completeness and the ladder."""
    direction = Direction(direction)
    decaying, growing = build_associated_chain(profile, ctx, direction, n_max, tol, seed_x)
    reports = [asymptotic_ratio_test(m, profile, ctx, decaying.variant) for m in decaying.members]
    reports += [asymptotic_ratio_test(m, profile, ctx, growing.variant) for m in growing.members]
    dec_verdicts = [m.norm.at(direction) for m in decaying.members]
    gro_verdicts = [m.norm.at(direction) for m in growing.members]
    monotone = corollary7_check(decaying).passed and corollary7_check(growing).passed
    completeness = corollary4_check(decaying, profile, ctx).residual if n_max >= 1 else 0.0
    ladder = ladder_check(decaying, profile)

    passed = bool(
        max(decaying.link_residuals + growing.link_residuals, default=0.0) <= settings.CHAIN_TOL
        and all(r.passed for r in reports if r.kind == "decaying")
        and all(v is Verdict.YES for v in dec_verdicts)
        and all(v is Verdict.NO for v in gro_verdicts)
        and monotone
        and completeness <= COMPLETENESS_TOL
        and ladder.passed
    )
    if not passed:
        logger.warning(f"{profile.label}: chain suite failed at lambda={ctx.lam} ({direction.value})")
    return Lemma9Report(lam=ctx.value, direction=direction.value, variant=decaying.variant.value, n_max=n_max,
                        decaying_residuals=decaying.link_residuals, growing_residuals=growing.link_residuals,
                        asymptotics=reports, decaying_verdicts=[v.value for v in dec_verdicts],
                        growing_verdicts=[v.value for v in gro_verdicts], monotone=monotone,
                        completeness_residual=completeness, ladder_passed=ladder.passed, passed=passed)
