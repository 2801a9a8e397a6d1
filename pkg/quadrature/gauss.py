"""Segment-wise and cumulative integrals over ordered breakpoints."""
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import quad_vec

from utils.errors import IntegrationError

_SAMPLE = np.array([0.25, 0.5, 0.75])


def segment_integrals(f: Callable, edges: np.ndarray, tol: float = 1e-10) -> Tuple[np.ndarray, float]:
    """Integrals of f over consecutive [edges[k], edges[k+1]].

    Every segment is mapped onto [0, 1] and the whole set goes through one
    adaptive Gauss-Kronrod pass of `quad_vec`. Each component is divided by a
    rough size of its own integral first, so `tol` acts per segment.
    Returns the per-segment integrals and the summed error estimate.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        return np.zeros(0, dtype=complex), 0.0

    start, width = edges[:-1], np.diff(edges)
    pts = start[:, None] + width[:, None] * _SAMPLE[None, :]
    size = np.abs(np.asarray(f(pts.ravel()), dtype=complex)).reshape(pts.shape).max(axis=1) * np.abs(width)
    scale = np.where(np.isfinite(size) & (size > 0), size, 1.0)
    n = start.size

    def mapped(t: float) -> np.ndarray:
        x = start + t * width
        vals = np.broadcast_to(np.asarray(f(x), dtype=complex), x.shape) * (width / scale)
        return np.concatenate([vals.real, vals.imag])

    res, err, info = quad_vec(mapped, 0.0, 1.0, epsrel=tol, norm="max", full_output=True)
    if info.status in (1, 3):
        raise IntegrationError(f"segment quadrature stopped with status {info.status}", float(edges[0]))
    return (res[:n] + 1j * res[n:]) * scale, float(err * scale.sum())


def cumulative_integral(f: Callable, base: float, xs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """int_base^x f for every x in xs (any order, may straddle base)."""
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs)
    sorted_x = xs[order]
    out = np.empty(xs.shape, dtype=complex)

    above = sorted_x >= base
    if above.any():
        edges = np.concatenate([[base], sorted_x[above]])
        out[order[above]] = np.cumsum(segment_integrals(f, edges, tol)[0])
    below = ~above
    if below.any():
        edges = np.concatenate([[base], sorted_x[below][::-1]])
        out[order[below][::-1]] = np.cumsum(segment_integrals(f, edges, tol)[0])
    return out
