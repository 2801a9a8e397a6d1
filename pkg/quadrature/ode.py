"""Adaptive complex integration of psi'' = (V - lam) psi - rho."""
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from config.settings import settings
from quadrature.grid import Grid
from utils.errors import IntegrationError
from utils.formatting import write_csv
from utils.logging import logger

# x -> (psi, psi')
Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

# Finite-difference step in units of the local wavelength 1/|sqrt(V - lam)|
_FD_WAVELENGTHS = 2e-2


@dataclass(frozen=True, eq=False)
class ComplexTrajectory:
    """Samples of (psi, psi') on a grid plus an optional dense evaluator."""

    grid: Grid
    psi: np.ndarray
    dpsi: np.ndarray
    tol_achieved: float
    dense: Optional[Evaluator] = None

    def __post_init__(self):
        finite = np.isfinite(self.psi) & np.isfinite(self.dpsi)
        if not finite.all():
            raise IntegrationError("trajectory holds non-finite samples",
                                   float(self.grid.abscissas[np.argmin(finite)]))

    def __call__(self, x):
        if self.dense is None:
            raise ValueError("trajectory has no dense output")
        return self.dense(x)

    @property
    def interval(self) -> Tuple[float, float]:
        return float(self.grid.abscissas[0]), float(self.grid.abscissas[-1])

    def to_csv(self, path: Path, extra: Optional[dict] = None) -> Path:
        columns = {"x": self.grid.abscissas, "psi": self.psi, "dpsi": self.dpsi}
        columns.update(extra or {})
        return write_csv(columns, path)


def sample(evaluator: Evaluator, xs: np.ndarray, tol: float, side: str = "both") -> ComplexTrajectory:
    psi, dpsi = evaluator(xs)
    return ComplexTrajectory(grid=Grid(xs, side), psi=np.asarray(psi, dtype=complex),
                             dpsi=np.asarray(dpsi, dtype=complex), tol_achieved=tol, dense=evaluator)


def piecewise(segments: List[Tuple[float, float, Evaluator]]) -> Evaluator:
    """Evaluator that dispatches on x to the first segment [lo, hi] containing it."""

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x)
        psi = np.empty(flat.shape, dtype=complex)
        dpsi = np.empty(flat.shape, dtype=complex)
        todo = np.ones(flat.shape, dtype=bool)
        for lo, hi, evaluator in segments:
            mask = todo & (flat >= lo) & (flat <= hi)
            if mask.any():
                p, d = evaluator(flat[mask])
                psi[mask], dpsi[mask] = p, d
                todo &= ~mask
        if todo.any():
            raise ValueError(f"x = {flat[todo][0]:.6g} lies outside every trajectory segment")
        if x.ndim == 0:
            return complex(psi[0]), complex(dpsi[0])
        return psi, dpsi

    return evaluate


def _schrodinger_rhs_factory(v: Callable, lam: complex, rho: Optional[Callable]):
    def rhs(x, y):
        force = (v(x) - lam) * y[0]
        if rho is not None:
            force = force - rho(x)
        return np.array([y[1], force], dtype=complex)
    return rhs


def solve_linear(rhs: Callable, x0: float, x1: float, y0: np.ndarray, tol: float,
                 atol=None, method: str = "DOP853"):
    """solve_ivp with dense output; raises IntegrationError with the last x reached.

    The default absolute tolerance is set per component from the initial data,
    so components starting at zero are controlled relatively.
    """
    y0 = np.asarray(y0)
    if atol is None:
        atol = np.maximum(tol * 1e-8 * np.abs(y0), 1e-300)
    sol = solve_ivp(rhs, (x0, x1), y0, method=method, rtol=tol, atol=atol, dense_output=True)
    if sol.status != 0:
        logger.error(f"ODE integration stopped: {sol.message}")
        raise IntegrationError(f"step size underflow ({sol.message})", float(sol.t[-1]))
    return sol


def integrate_schrodinger(profile, lam: complex, rho: Optional[Callable], interval: Tuple[float, float],
                          init: Tuple[complex, complex], tol: float = None, n: int = None,
                          atol=None) -> ComplexTrajectory:
    """Integrate from interval[0] to interval[1] (either direction).

    `rho` maps x to the source term; the returned grid is increasing in x.
    """
    tol = tol or settings.ODE_TOL
    x0, x1 = map(float, interval)
    if max(abs(x0), abs(x1)) > profile.Xmax * (1 + 1e-12):
        raise ValueError(f"interval {interval} leaves [-Xmax, Xmax]")
    y0 = np.array(init, dtype=complex)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial data must be finite")
    if atol is None:
        atol = max(tol * 1e-8 * float(np.max(np.abs(y0))), 1e-300)
    rhs = _schrodinger_rhs_factory(profile.v, complex(lam), rho)
    sol = solve_linear(rhs, x0, x1, y0, tol, atol)

    def dense(x):
        values = sol.sol(np.asarray(x, dtype=float))
        return values[0], values[1]

    lo, hi = min(x0, x1), max(x0, x1)
    xs = np.linspace(lo, hi, n or settings.GRID_POINTS)
    logger.debug(f"Integrated {profile.label} from {x0:g} to {x1:g} in {sol.t.size} steps")
    return sample(dense, xs, tol)


def fd_step(profile, lam: complex, x: np.ndarray) -> np.ndarray:
    f = np.abs(np.asarray(profile.v(x)) - lam)
    return np.minimum(_FD_WAVELENGTHS / np.sqrt(f + 1.0), 1e-2 * np.maximum(1.0, np.abs(x)))


def second_derivative(evaluator: Evaluator, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Fourth-order centred difference of psi' from the dense output."""
    d = [np.asarray(evaluator(x + k * h)[1]) for k in (-2, -1, 1, 2)]
    return (d[0] - 8 * d[1] + 8 * d[2] - d[3]) / (12 * h)


def second_difference(g: Callable, x: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centred second difference of a value-only function."""
    v = [np.asarray(g(x + k * h)) for k in (-2, -1, 0, 1, 2)]
    return (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)


def absolute_residual(profile, lam: complex, evaluator: Evaluator, x: np.ndarray,
                      rho: Optional[Callable] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|-psi'' + (V - lam) psi - rho| with |(V - lam) psi| and |rho| for scaling."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(profile.v(x)) - lam
    psi, _ = evaluator(x)
    psi2 = second_derivative(evaluator, x, fd_step(profile, lam, x))
    source = np.zeros_like(psi) if rho is None else np.asarray(rho(x))
    return np.abs(-psi2 + f * psi - source), np.abs(f * psi), np.abs(source)
