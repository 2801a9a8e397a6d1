"""Derivative stacks ("jets") and Wronskian determinants built from them.

A jet of order k is an array of shape (k + 1, n): row m holds the m-th
derivative at n abscissas. Members of a Jordan chain get their higher
derivatives from the equation itself, phi'' = (V - lam) phi - phi_prev,
never from repeated numerical differentiation.
"""
from functools import lru_cache
from math import comb
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from potential.expression import X
from potential.profile import PotentialProfile

Jet = np.ndarray

# Neighbouring samples whose arg differs by more than this bracket a zero
ARG_JUMP_LIMIT = 0.5 * np.pi


def potential_jet(profile: PotentialProfile, x: np.ndarray, order: int) -> Jet:
    """V, V', ..., V^(order) at x."""
    x = np.asarray(x, dtype=float)
    return np.array([np.asarray(profile.derivative(m)(x)) + 0j * x for m in range(order + 1)], dtype=complex)


def extend_jet(base: Jet, vjet: Jet, lam: complex, order: int, source: Optional[Jet] = None) -> Jet:
    """Grow (phi, phi') to `order` derivatives with phi'' = (V - lam) phi - source."""
    out = np.zeros((order + 1, base.shape[1]), dtype=complex)
    out[:min(2, order + 1)] = base[:min(2, order + 1)]
    for m in range(order - 1):
        total = sum(comb(m, r) * (vjet[r] - (lam if r == 0 else 0.0)) * out[m - r] for r in range(m + 1))
        if source is not None:
            total = total - source[m]
        out[m + 2] = total
    return out


def member_jet(members: Sequence, n: int, profile: PotentialProfile, lam: complex, x: np.ndarray,
               order: int, vjet: Optional[Jet] = None) -> Jet:
    """Jet of chain member n; lower members supply the source term."""
    x = np.asarray(x, dtype=float)
    vjet = potential_jet(profile, x, max(order - 2, 0)) if vjet is None else vjet
    psi, dpsi = members[n](x)
    base = np.array([np.asarray(psi), np.asarray(dpsi)], dtype=complex).reshape(2, -1)
    source = member_jet(members, n - 1, profile, lam, x, order - 2, vjet) if n > 0 and order >= 2 else None
    return extend_jet(base, vjet, lam, order, source)


@lru_cache(maxsize=256)
def _lambdified(expr: sp.Expr, order: int) -> Callable:
    return sp.lambdify(X, sp.diff(expr, X, order), "numpy")


def expression_jet(expr: sp.Expr, x: np.ndarray, order: int) -> Jet:
    """Exact derivatives of a closed-form test function."""
    x = np.asarray(x, dtype=float)
    return np.array([np.asarray(_lambdified(expr, m)(x)) + 0j * x for m in range(order + 1)], dtype=complex)


def chi_jet(chi: np.ndarray, vjet: Jet, lam: complex, order: int) -> Jet:
    """chi = -phi'/phi and its derivatives from chi' = chi^2 - (V - lam)."""
    out = np.zeros((order + 1, np.size(chi)), dtype=complex)
    out[0] = chi
    for m in range(order):
        square = sum(comb(m, r) * out[r] * out[m - r] for r in range(m + 1))
        out[m + 1] = square - (vjet[m] - (lam if m == 0 else 0.0))
    return out


def leibniz(a: Jet, b: Jet, m: int) -> np.ndarray:
    """m-th derivative of a*b."""
    return sum(comb(m, r) * a[r] * b[m - r] for r in range(m + 1))


def _determinants(jets: Sequence[Jet], rows: Tuple[int, ...]) -> np.ndarray:
    matrix = np.stack([np.stack([jet[r] for jet in jets], axis=-1) for r in rows], axis=-2)
    return np.linalg.det(matrix)


def wronskian_derivatives(jets: Sequence[Jet], k: int = 0) -> List[np.ndarray]:
    """W, W', ..., W^(k) of the functions whose jets are given (LU per abscissa).

    Each derivative of det[f_j^(o_i)] raises one row order at a time;
    terms with a repeated order vanish.
    """
    n = len(jets)
    if n == 0:
        size = 1 if k == 0 else k + 1
        return [np.ones(1, dtype=complex)] + [np.zeros(1, dtype=complex)] * (size - 1)
    terms: Dict[Tuple[int, ...], int] = {tuple(range(n)): 1}
    out = []
    for level in range(k + 1):
        out.append(sum(c * _determinants(jets, rows) for rows, c in terms.items()))
        if level == k:
            break
        nxt: Dict[Tuple[int, ...], int] = {}
        for rows, c in terms.items():
            for i in range(n):
                raised = rows[:i] + (rows[i] + 1,) + rows[i + 1:]
                if len(set(raised)) == n:
                    nxt[raised] = nxt.get(raised, 0) + c
        terms = nxt
    return out


def log_derivatives(w: Sequence[np.ndarray]) -> List[np.ndarray]:
    """(ln W)', (ln W)'', ... from W and its derivatives (up to fourth order)."""
    u = [wk / w[0] for wk in w]
    out = []
    if len(u) > 1:
        out.append(u[1])
    if len(u) > 2:
        out.append(u[2] - u[1] ** 2)
    if len(u) > 3:
        out.append(u[3] - 3 * u[2] * u[1] + 2 * u[1] ** 3)
    if len(u) > 4:
        out.append(u[4] - 4 * u[3] * u[1] - 3 * u[2] ** 2 + 12 * u[2] * u[1] ** 2 - 6 * u[1] ** 4)
    return out


def find_zeros(x: np.ndarray, values: np.ndarray) -> List[float]:
    """Abscissas where a complex function vanishes or its argument jumps by more than pi/2."""
    values = np.asarray(values, dtype=complex)
    exact = x[values == 0]
    jumps = np.abs(np.angle(values[1:] / np.where(values[:-1] == 0, 1.0, values[:-1])))
    between = 0.5 * (x[1:] + x[:-1])[jumps > ARG_JUMP_LIMIT]
    return sorted(set(exact.tolist()) | set(between.tolist()))
