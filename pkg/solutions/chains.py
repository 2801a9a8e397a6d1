"""Jordan chains of formal associated functions and their residual checks.

Member l+1 is -(hat_phi0 A - phi0 B)/2 with A' = phi0 phi_l and
B' = hat_phi0 phi_l; the Wronskian hat_phi0' phi0 - hat_phi0 phi0' = 2 makes
(h - lam) phi_(l+1) = phi_l exact. The integration constants pick the
decaying (or growing) member with the 1/n! normalization.
"""
from dataclasses import dataclass, field
from math import factorial
from typing import List, Optional, Tuple, Union

import numpy as np

from config.settings import settings
from potential.branch import BranchContext, Direction
from potential.profile import PotentialProfile, oriented
from quadrature.functionals import Variant, detect_variant
from quadrature.ode import absolute_residual, integrate_schrodinger, sample, solve_linear
from solutions.asymptotics import tail_half_integral
from solutions.formal import (
    FormalSolution,
    Kind,
    Verdict,
    classified,
    in_direction,
    projection_residual,
    trusted_span,
)
from solutions.zero_modes import build_decaying_ode, build_growing, trust_top
from utils.errors import ChainError, DivergenceError, IntegrationError
from utils.logging import logger

_RESIDUAL_SAMPLES = 400


@dataclass(frozen=True)
class JordanChain:
    lam: complex
    direction: Direction
    kind: Kind
    variant: Variant
    members: List[FormalSolution]
    link_residuals: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, order: int) -> FormalSolution:
        return self.members[order]

    @property
    def n_max(self) -> int:
        return len(self.members) - 1

    def manifest(self) -> dict:
        return {
            "lambda": self.lam,
            "direction": self.direction.value,
            "kind": self.kind.value,
            "variant": self.variant.value,
            "orders": [m.order for m in self.members],
            "link_residuals": self.link_residuals,
            "norm_plus": [m.norm.plus.value for m in self.members],
            "norm_minus": [m.norm.minus.value for m in self.members],
            "reach": [list(m.reach) for m in self.members],
        }


def interior_points(lo: float, hi: float, n: int = _RESIDUAL_SAMPLES) -> np.ndarray:
    """Samples of [lo, hi] that keep a finite-difference stencil inside it."""
    margin = 0.03 * max(1.0, abs(lo), abs(hi))
    if hi - lo <= 2 * margin:
        raise ValueError(f"interval [{lo:g}, {hi:g}] too short for residual sampling")
    return np.linspace(lo + margin, hi - margin, n)


def link_residual(prev: Optional[FormalSolution], member: FormalSolution, profile: PotentialProfile,
                  span: Optional[Tuple[float, float]] = None) -> float:
    """sup |(h - lam) member - prev| relative to the larger of sup |prev| and sup |(V - lam) member|.

    With prev None this is the residual of the homogeneous equation.
    """
    lo, hi = span or trusted_span(member)
    x = interior_points(lo, hi)
    rho = None if prev is None else (lambda s: prev(s)[0])
    residual, kinetic, source = absolute_residual(profile, member.lam.value, member, x, rho)
    return float(residual.max() / max(kinetic.max(), source.max(), 1e-300))


def _quadrature_pair(rhs, x0: float, x1: float, y0, order: int, tol: float):
    try:
        return solve_linear(rhs, x0, x1, np.asarray(y0, dtype=complex), tol)
    except (IntegrationError, DivergenceError) as e:
        logger.error(f"Member integral for order {order} failed: {e}")
        raise ChainError(f"member integral failed: {e}", order) from e


def _tail_power(p: PotentialProfile, ctx: BranchContext, X: float, order: int) -> complex:
    try:
        return complex(tail_half_integral(p, ctx, X))
    except (IntegrationError, DivergenceError) as e:
        logger.error(f"Tail integral of 1/sqrt(V - lambda) failed at order {order}: {e}")
        raise ChainError(f"tail integral failed: {e}", order) from e


def _next_decaying(prev: FormalSolution, phi0: FormalSolution, hat0: FormalSolution, p: PotentialProfile,
                   ctx: BranchContext, variant: Variant, base: float, tol: float) -> FormalSolution:
    l = prev.order
    X = prev.reach[1]
    if X <= base * (1 + 1e-9):
        raise ChainError(f"no trusted room above {base:g} for the next member", l + 1)

    def rhs(x, y):
        f = prev(x)[0]
        return np.array([phi0(x)[0] * f, hat0(x)[0] * f])

    g0, dg0 = phi0(X)
    h0, dh0 = prev(X)
    g = g0 * h0
    A_X = g / (dg0 / g0 + dh0 / h0)
    if variant is Variant.CONVERGENT:
        M = _tail_power(p, ctx, X, l + 1)
        B_X = -(-0.5) ** l * M ** (l + 1) / factorial(l + 1)
    else:
        B_X = 0.0
    sol = _quadrature_pair(rhs, X, base, [A_X, B_X], l + 1, tol)
    shift = complex(sol.sol(base)[1]) if variant is Variant.DIVERGENT else 0.0

    def dense(x):
        A, B = sol.sol(np.asarray(x, dtype=float))
        B = B - shift
        f, df = phi0(x)
        h, dh = hat0(x)
        return -0.5 * (h * A - f * B), -0.5 * (dh * A - df * B)

    traj = sample(dense, np.linspace(base, X, settings.GRID_POINTS), tol)
    member = FormalSolution(order=l + 1, lam=ctx.lam, direction=Direction.UP, kind=Kind.DECAYING, traj=traj,
                            reach=(0.0, trust_top(p, ctx, X)), seed=X, label=f"phi_{l + 1}")
    return classified(member, p)


def _next_growing(prev: FormalSolution, phi0: FormalSolution, hat0: FormalSolution, p: PotentialProfile,
                  ctx: BranchContext, variant: Variant, base: float, tol: float) -> FormalSolution:
    l = prev.order
    X0 = hat0.seed

    def rhs(x, y):
        f = prev(x)[0]
        return np.array([phi0(x)[0] * f, hat0(x)[0] * f])

    sol = _quadrature_pair(rhs, base, X0, [0.0, 0.0], l + 1, tol)
    if variant is Variant.CONVERGENT:
        M = _tail_power(p, ctx, X0, l + 1)
        shift = complex(sol.sol(X0)[0]) + 0.5 ** l * M ** (l + 1) / factorial(l + 1)
    else:
        shift = 0.0

    def dense(x):
        A, B = sol.sol(np.asarray(x, dtype=float))
        A = A - shift
        f, df = phi0(x)
        h, dh = hat0(x)
        return -0.5 * (h * A - f * B), -0.5 * (dh * A - df * B)

    traj = sample(dense, np.linspace(base, X0, settings.GRID_POINTS), tol)
    member = FormalSolution(order=l + 1, lam=ctx.lam, direction=Direction.UP, kind=Kind.GROWING, traj=traj,
                            reach=(0.0, X0), seed=X0, label=f"hat phi_{l + 1}")
    return classified(member, p)


def build_associated_chain(profile: PotentialProfile, ctx: BranchContext, direction: Union[str, Direction] = "up",
                           n_max: int = 2, tol: float = None, seed_x: Optional[float] = None,
                           phi0: Optional[FormalSolution] = None) -> Tuple[JordanChain, JordanChain]:
    """Decaying chain phi_0..phi_n and growing chain hat phi_0..hat phi_n at one infinity."""
    direction = Direction(direction)
    tol = tol or settings.ODE_TOL
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    variant = detect_variant(profile, direction)
    p = oriented(profile, direction.value)
    phi0 = phi0 or build_decaying_ode(profile, ctx, direction, seed_x, tol)
    hat0 = build_growing(phi0, profile, ctx, tol)
    up0, uphat0 = in_direction(phi0, Direction.UP), in_direction(hat0, Direction.UP)
    base = max(ctx.R1, uphat0.interval[0])

    decaying, growing = [up0], [uphat0]
    for _ in range(n_max):
        decaying.append(_next_decaying(decaying[-1], up0, uphat0, p, ctx, variant, base, tol))
        growing.append(_next_growing(growing[-1], up0, uphat0, p, ctx, variant, base, tol))

    chains = []
    for kind, members in ((Kind.DECAYING, decaying), (Kind.GROWING, growing)):
        residuals = [link_residual(a, b, p) for a, b in zip(members, members[1:])]
        worst = max(residuals, default=0.0)
        if worst > settings.CHAIN_TOL:
            logger.warning(f"{profile.label}: {kind.value} chain at lambda={ctx.lam} has link residual {worst:.3e}")
        chains.append(JordanChain(lam=ctx.value, direction=direction, kind=kind, variant=variant,
                                  members=[in_direction(m, direction) for m in members],
                                  link_residuals=residuals))
    logger.info(f"{profile.label}: built {variant.value} chains of length {n_max + 1} at lambda={ctx.lam} "
                f"({direction.value}), base {base:.6g}")
    return chains[0], chains[1]


@dataclass(frozen=True)
class LadderReport:
    zero_mode_residual: float
    accumulated: List[float]
    passed: bool


def ladder_check(chain: JordanChain, profile: PotentialProfile, tol: float = None) -> LadderReport:
    """Walking the link map down from member n accumulates at most n*tol before the zero mode is reached."""
    tol = tol or settings.CHAIN_TOL
    zero = link_residual(None, chain[0], profile)
    accumulated = np.cumsum([0.0] + list(chain.link_residuals)).tolist()
    passed = zero <= tol and all(a <= n * tol for n, a in enumerate(accumulated))
    return LadderReport(zero_mode_residual=zero, accumulated=accumulated, passed=passed)


@dataclass(frozen=True)
class MonotonicityReport:
    violations: List[Tuple[int, str]]
    passed: bool


def corollary7_check(chain: JordanChain) -> MonotonicityReport:
    """A member normalizable at an infinity forces every lower member to be normalizable there."""
    violations = []
    for side in (Direction.UP, Direction.DOWN):
        verdicts = [m.norm.at(side) for m in chain.members]
        for n, verdict in enumerate(verdicts):
            if verdict is Verdict.YES and any(v is not Verdict.YES for v in verdicts[:n]):
                violations.append((n, side.value))
    return MonotonicityReport(violations=violations, passed=not violations)


@dataclass(frozen=True)
class CompletenessReport:
    order: int
    coefficients: List[complex]
    residual: float
    passed: bool


def corollary4_check(chain: JordanChain, profile: PotentialProfile, ctx: BranchContext, order: int = None,
                     tol: float = 1e-5) -> CompletenessReport:
    """An independently integrated order-n member is a combination of phi_0..phi_n."""
    order = chain.n_max if order is None else order
    if not 1 <= order <= chain.n_max or chain.kind is not Kind.DECAYING:
        raise ValueError(f"need a decaying chain with a member of order {order}")
    p = oriented(profile, chain.direction.value)
    members = [in_direction(m, Direction.UP) for m in chain.members[:order + 1]]
    prev, target = members[order - 1], members[order]
    lo = target.interval[0]
    alt = integrate_schrodinger(p, ctx.value, lambda s: prev(s)[0], (prev.reach[1], lo), (0.0, 0.0))
    x = np.geomspace(lo, target.reach[1], 200)
    coeffs, residual = projection_residual(alt(x)[0], [m(x)[0] for m in members])
    passed = residual <= tol
    if not passed:
        logger.warning(f"{profile.label}: independent order-{order} member leaves residual {residual:.3e}")
    return CompletenessReport(order=order, coefficients=coeffs.tolist(), residual=residual, passed=passed)
