"""Improper integrals with fitted tails, and slope/boundedness certificates."""
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import quad

from config.constants import BOUNDED_FACTOR, VARIANT_DIVERGENT_ABOVE
from config.settings import settings
from utils.errors import DivergenceError, IntegrationError
from utils.logging import logger

_TAIL_SAMPLES = 24
_PANELS = 40


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    abs_error_est: float
    truncated_at: Optional[float] = None


@dataclass(frozen=True)
class TailFit:
    model: str          # "power" or "exponential"
    exponent: float     # power-law slope, or exponential rate per unit x
    residual: float
    converges: bool


def fit_log_tail(t: np.ndarray, log_values: np.ndarray) -> TailFit:
    """Pick the better of log|f| ~ s log t and log|f| ~ c t."""
    t = np.asarray(t, dtype=float)
    logv = np.asarray(log_values, dtype=float)
    fits = []
    for model, abscissa in (("power", np.log(t)), ("exponential", t)):
        coeffs, res, *_ = np.polyfit(abscissa, logv, 1, full=True)
        fits.append((model, float(coeffs[0]), float(res[0]) if len(res) else 0.0))
    model, slope, residual = min(fits, key=lambda item: item[2])
    converges = slope < VARIANT_DIVERGENT_ABOVE if model == "power" else slope < 0
    return TailFit(model=model, exponent=slope, residual=residual, converges=converges)


def fit_tail(t: np.ndarray, values: np.ndarray) -> TailFit:
    """Pick the better of |f| ~ t^s and |f| ~ exp(c t) on the given samples."""
    return fit_log_tail(t, np.log(np.maximum(np.abs(np.asarray(values)), 1e-300)))


def improper_integral(f: Callable, a: float, direction: str = "up", tol: float = None,
                      x_max: float = None) -> QuadratureResult:
    """int_a^{+inf} f (up) or int_{-inf}^a f (down), truncated at x_max plus a fitted tail."""
    tol = tol or settings.QUAD_TOL
    sign = 1.0 if direction == "up" else -1.0
    start = sign * a
    x_max = x_max or settings.XMAX_FACTOR * max(1.0, abs(start))
    if x_max <= start:
        raise ValueError(f"truncation point {x_max} must exceed the lower limit {start}")
    g = lambda t: f(sign * t)

    edges = np.geomspace(start, x_max, _PANELS + 1) if start > 0 else np.linspace(start, x_max, _PANELS + 1)
    finite, err = 0j, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, e = quad(g, lo, hi, epsabs=0.0, epsrel=tol, limit=200, complex_func=True)
        finite += value
        err += abs(complex(e).real) + abs(complex(e).imag)

    t = np.geomspace(max(start, x_max / 10.0), x_max, _TAIL_SAMPLES)
    samples = np.asarray(g(t))
    fit = fit_tail(t, samples)
    if not fit.converges:
        logger.warning(f"Integrand tail is not decaying ({fit.model} exponent {fit.exponent:.3f})")
        raise DivergenceError(f"integrand tail does not decay fast enough ({fit.model} exponent {fit.exponent:.3f})",
                              fit.exponent)
    end = samples[-1]
    if fit.model == "power":
        tail = end * x_max / (-fit.exponent - 1.0)
    else:
        tail = end / (-fit.exponent)
    spread = np.sqrt(fit.residual / t.size)
    total = finite + tail
    return QuadratureResult(value=complex(total), abs_error_est=float(err + abs(tail) * min(1.0, spread)),
                            truncated_at=float(sign * x_max))


def decay_exponent(values: np.ndarray, weights: np.ndarray) -> float:
    """Least-squares slope of log(values) against log(weights)."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size < 8:
        raise ValueError(f"decay_exponent needs at least 8 samples, got {values.size}")
    if np.any(values <= 0) or np.any(weights <= 0):
        raise ValueError("decay_exponent needs positive values and weights")
    return float(np.polyfit(np.log(weights), np.log(values), 1)[0])


def doubling_windows(x: np.ndarray, values: np.ndarray, x_end: float, windows: int = 3) -> List[float]:
    """Maxima of |values| over [x_end/2^k, x_end/2^(k-1)], innermost window first."""
    x = np.abs(np.asarray(x, dtype=float))
    values = np.abs(np.asarray(values, dtype=float))
    maxima = []
    for k in range(windows, 0, -1):
        lo, hi = x_end / 2 ** k, x_end / 2 ** (k - 1)
        mask = (x >= lo) & (x <= hi)
        if not mask.any():
            raise IntegrationError("doubling window holds no samples", float(lo))
        maxima.append(float(values[mask].max()))
    return maxima


def envelope_bounded(maxima: List[float], factor: float = BOUNDED_FACTOR) -> bool:
    return all(np.isfinite(maxima)) and all(b <= factor * a + 1e-300 for a, b in zip(maxima, maxima[1:]))
