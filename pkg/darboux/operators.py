"""Differential operators acting on jets, and the intertwining/adjointness checks run against them."""
from dataclasses import dataclass
from typing import List, Protocol, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy.integrate import simpson

from darboux.jets import Jet, expression_jet, leibniz, potential_jet
from potential.expression import X
from potential.profile import PotentialProfile
from quadrature.ode import fd_step, second_difference
from utils.logging import logger


class Operator(Protocol):
    """A linear differential operator of finite order; apply() takes a jet of at least that order."""

    order: int

    def apply(self, jet: Jet, x: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True, eq=False)
class FactorComposition:
    """r_N ... r_1 applied in order, or the transpose (r_1)^t ... (r_N)^t (last factor acts first)."""

    factors: Tuple
    transpose: bool = False

    @property
    def order(self) -> int:
        return len(self.factors)

    def act(self, jet: Jet, x: np.ndarray) -> Jet:
        sequence = reversed(self.factors) if self.transpose else self.factors
        for factor in sequence:
            jet = factor.act(jet, x, transpose=self.transpose)
        return jet

    def apply(self, jet: Jet, x: np.ndarray) -> np.ndarray:
        return self.act(jet[:self.order + 1], x)[0]


def gaussian_bundle(centres: Sequence[float], width: float) -> List[sp.Expr]:
    return [sp.exp(-(X - sp.Float(c)) ** 2 / (2 * sp.Float(width) ** 2)) for c in centres]


def apply_hamiltonian_jet(profile: PotentialProfile, fjet: Jet, x: np.ndarray, order: int) -> Jet:
    """Jet of -f'' + V f up to `order`, from a jet of f of order + 2."""
    vjet = potential_jet(profile, x, order)
    return np.array([-fjet[m + 2] + leibniz(vjet, fjet, m) for m in range(order + 1)])


def verify_intertwining(h_plus: PotentialProfile, h_minus: PotentialProfile, q: Operator,
                        bundle: Sequence[sp.Expr], x: np.ndarray) -> float:
    """max over the bundle of sup|q(h+ f) - h-(q f)| relative to sup|f| and sup|q(h+ f)|.

    h+ f enters through exact derivatives of f; h- acts on samples of q f by
    a fourth-order second difference.
    """
    x = np.asarray(x, dtype=float)
    step = fd_step(h_minus, 0.0, x)
    v_minus = np.asarray(h_minus.v(x))
    worst = 0.0
    for f in bundle:
        fjet = expression_jet(f, x, q.order + 2)
        left = q.apply(apply_hamiltonian_jet(h_plus, fjet, x, q.order), x)
        qf = lambda s, f=f: q.apply(expression_jet(f, s, q.order), s)
        right = -second_difference(qf, x, step) + v_minus * qf(x)
        scale = max(float(np.max(np.abs(fjet[0]))), float(np.max(np.abs(left))), 1e-300)
        worst = max(worst, float(np.max(np.abs(left - right))) / scale)
    logger.debug(f"Intertwining residual over {len(bundle)} test functions: {worst:.3e}")
    return worst


def adjoint_gap(q_minus: Operator, q_plus: Operator, pairs: Sequence[Tuple[sp.Expr, sp.Expr]],
                lo: float, hi: float, n: int = 8001) -> float:
    """max |<q- f, g> - <f, q+ g>| / (||q- f|| ||g|| + ||f|| ||q+ g||) with the bilinear pairing."""
    x = np.linspace(lo, hi, n)
    worst = 0.0
    for f, g in pairs:
        fjet = expression_jet(f, x, q_minus.order)
        gjet = expression_jet(g, x, q_plus.order)
        qf = q_minus.apply(fjet, x)
        qg = q_plus.apply(gjet, x)
        gap = abs(simpson(qf * gjet[0], x=x) - simpson(fjet[0] * qg, x=x))
        norm = lambda u: np.sqrt(simpson(np.abs(u) ** 2, x=x))
        scale = norm(qf) * norm(gjet[0]) + norm(fjet[0]) * norm(qg)
        worst = max(worst, float(gap / max(scale, 1e-300)))
    return worst
