"""Decaying and growing zero modes of h - lam at one infinity.

Every builder works on the oriented profile, where the construction
infinity is +infinity, and mirrors the result back for direction "down".
"""
from functools import lru_cache
from math import factorial
from typing import Optional, Tuple, Union

import numpy as np

from config.constants import SEED_I1_LIMIT, TRUST_CONTAMINATION
from config.settings import settings
from potential.branch import BranchContext, Direction, alpha, branch_power, xi
from potential.profile import PotentialProfile, oriented
from quadrature.functionals import I1
from quadrature.improper import improper_integral
from quadrature.ode import integrate_schrodinger, sample, solve_linear
from solutions.formal import FormalSolution, Kind, classified, in_direction
from utils.errors import SeedError, SeriesStartError, ZeroInDomainError
from utils.logging import logger

_XI_TABLE_POINTS = 256

# |phi0| must stay above this fraction of f^(-1/4) |e^(-xi)| beyond R3
_ENVELOPE_FLOOR = 0.5


@lru_cache(maxsize=64)
def _xi_table(p: PotentialProfile, ctx: BranchContext) -> Tuple[np.ndarray, np.ndarray]:
    t = np.geomspace(ctx.R1, p.Xmax, _XI_TABLE_POINTS)
    return t, xi(t, ctx, p).real


def default_seed(p: PotentialProfile, ctx: BranchContext) -> float:
    """Where Re xi reaches SEED_XI, or Xmax when it never does."""
    t, re_xi = _xi_table(p, ctx)
    if re_xi[-1] <= settings.SEED_XI:
        return float(p.Xmax)
    return float(np.interp(settings.SEED_XI, re_xi, t))


def trust_top(p: PotentialProfile, ctx: BranchContext, X: float) -> float:
    """Largest x whose contamination exp(-2 Re(xi(X) - xi(x))) stays below TRUST_CONTAMINATION."""
    t, re_xi = _xi_table(p, ctx)
    target = float(np.interp(X, t, re_xi)) + 0.5 * np.log(TRUST_CONTAMINATION)
    return float(max(ctx.R1, np.interp(target, re_xi, t)))


def trust_bottom(p: PotentialProfile, ctx: BranchContext, base: float) -> float:
    """Smallest x where a growing solution started at `base` has shed its decaying part below TRUST_CONTAMINATION."""
    t, re_xi = _xi_table(p, ctx)
    target = float(np.interp(base, t, re_xi)) - 0.5 * np.log(TRUST_CONTAMINATION)
    return float(min(p.Xmax, np.interp(target, re_xi, t)))


def _resolve_seed(p: PotentialProfile, ctx: BranchContext, seed_x: Optional[float]) -> float:
    X = seed_x or settings.SEED_X or default_seed(p, ctx)
    if not ctx.R1 < X <= p.Xmax * (1 + 1e-12):
        raise SeedError(f"seed {X:g} must lie in (R1, Xmax] = ({ctx.R1:g}, {p.Xmax:g}]")
    return float(min(X, p.Xmax))


def wkb_seed(p: PotentialProfile, ctx: BranchContext, X: float, tol: float = None) -> Tuple[complex, complex]:
    """(psi, psi') of the decaying mode at X from its leading asymptotics plus the alpha corrections."""
    f = complex(p.v(X)) - ctx.value
    root = branch_power(f, 0.5)
    a = complex(alpha(X, ctx, p))
    P1 = improper_integral(lambda t: alpha(t, ctx, p), X, "up", tol).value
    Q1 = a / (2.0 * root)
    corr = 1.0 - 0.5 * P1 + 0.5 * Q1 + P1 ** 2 / 8.0
    base = branch_power(f, -0.25) * np.exp(-xi(X, ctx, p))
    psi = base * corr
    dpsi = psi * (-root - 0.25 * complex(p.d1(X)) / f) + base * 0.5 * a
    return complex(psi), complex(dpsi)


def _finish(sol: FormalSolution, p: PotentialProfile, direction: Direction) -> FormalSolution:
    return in_direction(classified(sol, p), direction)


def build_decaying_ode(profile: PotentialProfile, ctx: BranchContext, direction: Union[str, Direction] = "up",
                       seed_x: Optional[float] = None, tol: float = None) -> FormalSolution:
    """Decaying zero mode phi0 integrated inward from an asymptotic seed to R1."""
    direction = Direction(direction)
    p = oriented(profile, direction.value)
    X = _resolve_seed(p, ctx, seed_x)
    i1 = float(I1(X, ctx, p, "up"))
    if i1 >= SEED_I1_LIMIT:
        raise SeedError(f"I1({X:g}) = {i1:.3g} is not below {SEED_I1_LIMIT}; seed deeper in the asymptotic region")

    traj = integrate_schrodinger(p, ctx.value, None, (X, ctx.R1), wkb_seed(p, ctx, X, tol), tol)
    sol = FormalSolution(order=0, lam=ctx.lam, direction=Direction.UP, kind=Kind.DECAYING, traj=traj,
                         reach=(0.0, trust_top(p, ctx, X)), seed=X, label="phi_0")
    logger.info(f"{profile.label}: built decaying zero mode at lambda={ctx.lam} ({direction.value}) "
                f"from seed {X:.6g}, trusted to {sol.reach[1]:.6g}")
    return _finish(sol, p, direction)


def build_decaying_series(profile: PotentialProfile, ctx: BranchContext, direction: Union[str, Direction] = "up",
                          n_terms: int = None, tol: float = None, seed_x: Optional[float] = None,
                          start: Optional[float] = None) -> FormalSolution:
    """Partial sum v0 + ... + v_n of the iterated-kernel series for phi0 on [start, seed].

    Each correction v_k = -(P_k - Q_k)/2 with P_k = int_x^inf alpha v_(k-1) and
    Q_k the same integral damped by exp(-2(xi(t) - xi(x))); both are carried
    as ODEs integrated inward from beyond the seed.
    """
    n = n_terms or settings.SERIES_TERMS
    if n < 1:
        raise ValueError("n_terms must be at least 1")
    direction = Direction(direction)
    p = oriented(profile, direction.value)
    X = _resolve_seed(p, ctx, seed_x)
    start = start or max(ctx.R1, 0.5 * X)
    i1_start = float(I1(start, ctx, p, "up"))
    if i1_start >= 1.0:
        raise SeriesStartError(f"I1({start:g}) = {i1_start:.3g} >= 1: start series deeper in the asymptotic region")

    lam = ctx.value
    x_far = max(X, min(1.5 * X, p.Xmax))

    def rhs(x, y):
        P, Q = y[:n], y[n:2 * n]
        a = alpha(x, ctx, p)
        root = branch_power(complex(p.v(x)) - lam, 0.5)
        prev = np.concatenate([[1.0], y[2 * n:3 * n - 1]])
        return np.concatenate([-a * prev, 2.0 * root * Q - a * prev, root * Q, [root]])

    a_far = complex(alpha(x_far, ctx, p))
    root_far = branch_power(complex(p.v(x_far)) - lam, 0.5)
    P1 = improper_integral(lambda t: alpha(t, ctx, p), x_far, "up", tol).value
    P, Q, v = np.zeros(n, complex), np.zeros(n, complex), np.zeros(n, complex)
    prev = 1.0
    for k in range(n):
        P[k] = prev * P1 / (k + 1)
        Q[k] = a_far * prev / (2.0 * root_far)
        v[k] = -0.5 * (P[k] - Q[k])
        prev = v[k]
    y0 = np.concatenate([P, Q, v, [xi(x_far, ctx, p)]])
    sol = solve_linear(rhs, x_far, start, y0, tol or settings.ODE_TOL)

    def dense(x):
        y = sol.sol(np.asarray(x, dtype=float))
        f = np.asarray(p.v(x)) - lam
        root = branch_power(f, 0.5)
        pre = branch_power(f, -0.25) * np.exp(-y[3 * n])
        psi = pre * (1.0 + y[2 * n:3 * n].sum(axis=0))
        dpsi = psi * (-root - 0.25 * np.asarray(p.d1(x)) / f) + pre * root * y[n:2 * n].sum(axis=0)
        return psi, dpsi

    xs = np.linspace(start, X, settings.GRID_POINTS)
    traj = sample(dense, xs, tol or settings.ODE_TOL)

    i1 = np.asarray(I1(xs, ctx, p, "up"))
    terms = np.abs(sol.sol(xs)[2 * n:3 * n])
    for k in range(1, n + 1):
        bound = 1.01 * i1 ** k / factorial(k) + 1e-15
        if np.any(terms[k - 1] > bound):
            logger.warning(f"{profile.label}: series term {k} exceeds its majorant I1^{k}/{k}! "
                           f"(max ratio {float(np.max(terms[k - 1] / bound)):.3g})")

    reach = X if x_far > X else trust_top(p, ctx, X)
    result = FormalSolution(order=0, lam=ctx.lam, direction=Direction.UP, kind=Kind.DECAYING, traj=traj,
                            reach=(0.0, reach), seed=X, label=f"phi_0 series ({n} terms)")
    logger.info(f"{profile.label}: summed {n}-term series for phi0 at lambda={ctx.lam} on [{start:.6g}, {X:.6g}]")
    return _finish(result, p, direction)


def find_r3(phi0: FormalSolution, p: PotentialProfile, ctx: BranchContext, n: int = None) -> float:
    """First abscissa beyond which |phi0| stays above half its asymptotic envelope."""
    lo, hi = phi0.interval
    lo = max(lo, ctx.R1)
    t = np.geomspace(lo, min(hi, phi0.seed or hi), n or _XI_TABLE_POINTS)
    f = np.asarray(p.v(t)) - ctx.value
    envelope = np.abs(branch_power(f, -0.25) * np.exp(-xi(t, ctx, p)))
    ratio = np.abs(np.asarray(phi0(t)[0])) / envelope
    low = np.nonzero(ratio < _ENVELOPE_FLOOR)[0]
    if low.size == 0:
        return float(t[0])
    if low[-1] >= t.size - 2:
        zeros = t[low][np.r_[True, np.diff(low) > 1]]
        raise ZeroInDomainError(f"no zero-free ray for phi0 in [{lo:g}, {t[-1]:g}]", zeros.tolist())
    r3 = float(t[low[-1] + 1])
    logger.warning(f"{p.label}: phi0 dips below its envelope, R3 moved out to {r3:.6g}")
    return r3


def build_growing(phi0: FormalSolution, profile: PotentialProfile, ctx: BranchContext,
                  tol: float = None) -> FormalSolution:
    """Growing companion 2 phi0 int_{R3}^x dt/phi0^2, carried as G' = (phi0'/phi0) G + 1/phi0."""
    if phi0.kind is not Kind.DECAYING:
        raise SeedError(f"growing companion needs a decaying zero mode, got {phi0.kind.name.lower()} {phi0.label}")
    direction = phi0.direction
    p = oriented(profile, direction.value)
    up = in_direction(phi0, Direction.UP)
    r3 = find_r3(up, p, ctx)
    X0 = float(up.seed or up.interval[1])
    tol = tol or settings.ODE_TOL

    def rhs(x, y):
        psi, dpsi = up(x)
        return np.array([dpsi / psi * y[0] + 1.0 / psi])

    start_slope = 1.0 / complex(up(r3)[0])
    sol = solve_linear(rhs, r3, X0, np.zeros(1, complex), tol, atol=tol * 1e-6 * abs(start_slope) * max(1.0, r3))

    def dense(x):
        G = sol.sol(np.asarray(x, dtype=float))[0]
        psi, dpsi = up(x)
        return 2.0 * G, 2.0 * (dpsi / psi * G + 1.0 / psi)

    traj = sample(dense, np.linspace(r3, X0, settings.GRID_POINTS), tol)
    hat = FormalSolution(order=0, lam=ctx.lam, direction=Direction.UP, kind=Kind.GROWING, traj=traj,
                         reach=(0.0, X0), seed=X0, label="hat phi_0")
    logger.info(f"{profile.label}: built growing zero mode at lambda={ctx.lam} ({direction.value}) on "
                f"[{r3:.6g}, {X0:.6g}]")
    return _finish(hat, p, direction)


def wronskian(hat: FormalSolution, phi: FormalSolution, x: np.ndarray) -> np.ndarray:
    """hat' phi - hat phi'."""
    h, dh = hat(x)
    f, df = phi(x)
    return np.asarray(dh) * np.asarray(f) - np.asarray(h) * np.asarray(df)


def normalize_growing(candidate: FormalSolution, phi0: FormalSolution, base: float) -> FormalSolution:
    """Scale an independent growing solution to Wronskian 2 against phi0 and remove its phi0 part at `base`.

    The result coincides with the reduction-of-order companion whose integral
    starts at `base`.
    """
    lo, hi = candidate.interval
    xs = np.linspace(lo, hi, 64)
    samples = wronskian(candidate, phi0, xs)
    w = complex(np.median(samples.real), np.median(samples.imag))
    if w == 0:
        raise ValueError("candidate is proportional to phi0")
    scale = 2.0 / w
    shift = scale * complex(candidate(base)[0]) / complex(phi0(base)[0])

    def dense(x):
        c, dc = candidate(x)
        f, df = phi0(x)
        return scale * np.asarray(c) - shift * np.asarray(f), scale * np.asarray(dc) - shift * np.asarray(df)

    traj = sample(dense, candidate.traj.grid.abscissas, candidate.traj.tol_achieved)
    logger.debug(f"Normalized growing solution: scale {scale:.6g}, phi0 share {shift:.6g}")
    return FormalSolution(order=0, lam=phi0.lam, direction=candidate.direction, kind=Kind.GROWING, traj=traj,
                          reach=candidate.reach, norm=candidate.norm, seed=candidate.seed,
                          label="hat phi_0 (normalized)")
