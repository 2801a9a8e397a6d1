"""Verification suites for first-order transforms and Nth-order intertwiners."""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from darboux.first_order import (
    Corollary6Report,
    DeltaVReport,
    TransformResult,
    corollary6_check,
    delta_v_suite,
)
from darboux.intertwiner import (
    IntertwinerN,
    Lemma2Report,
    factorize_chain,
    lemma2_check,
    stepwise_partner,
    transpose_action,
)
from darboux.jets import expression_jet, member_jet
from darboux.operators import FactorComposition, adjoint_gap, gaussian_bundle, verify_intertwining
from jordan.basis import Segment
from potential.branch import BranchContext
from solutions.chains import JordanChain, corollary7_check, interior_points
from solutions.formal import trusted_span
from utils.logging import logger

# Acceptance levels
BOOKKEEPING_TOL_EXACT = 1e-8
BOOKKEEPING_TOL_NUMERIC = 1e-6
INTERTWINING_TOL = 1e-6
INTERTWINING_TOL_N = 1e-5
ADJOINT_TOL = 1e-6
COMPOSITION_TOL = 1e-5
ANNIHILATION_TOL = 1e-8
PARTNER_TOL = 1e-6

_FIRST_ORDER_CENTRES = (-1.5, -0.5, 0.0, 0.7, 1.6)
# Bump positions as fractions of the longest working segment
_SEGMENT_FRACTIONS = (1.0, 1.6, 2.2, 2.8, 3.4)


def first_order_plan(domain: Tuple[float, float]) -> Tuple[List[float], Tuple[float, float]]:
    """Bump centres and the sampling interval for first-order bundles."""
    lo, hi = domain
    if lo <= -4.0 and hi >= 4.0:
        return list(_FIRST_ORDER_CENTRES), (-4.0, 4.0)
    length = hi - lo
    return list(np.linspace(lo + 0.3 * length, hi - 0.3 * length, 5)), (lo + 0.1 * length, hi - 0.1 * length)


def segment_plan(segments: Sequence[Segment]) -> Tuple[List[float], Tuple[float, float]]:
    """Bump centres on the longest working segment and its interior."""
    lo, hi = max(segments, key=lambda s: (round(s[1] - s[0], 9), s[1]))
    length = hi - lo
    centres = [lo + f * length / 7.0 for f in _SEGMENT_FRACTIONS]
    x = interior_points(lo, hi, 2)
    return centres, (float(x[0]), float(x[-1]))


@dataclass(frozen=True)
class Lemma10Report:
    lam: complex
    symbolic: bool
    bookkeeping: Tuple[float, float]
    bookkeeping_tol: float
    delta_v: DeltaVReport
    validation_passed: Optional[bool]
    intertwining: float
    adjoint: float
    passed: bool


def lemma10_suite(result: TransformResult, ctx: BranchContext) -> Lemma10Report:
    """Factorization bookkeeping, partner asymptotics, class re-validation, intertwining and adjointness."""
    ctx.lam.require_admissible()
    factor = result.factor
    x = interior_points(*result.domain)
    gaps = factor.reconstruction_gap(x, result.v2.v)
    exact = factor.phi is not None and factor.phi.expr is not None
    tol = BOOKKEEPING_TOL_EXACT if exact else BOOKKEEPING_TOL_NUMERIC

    delta_v = delta_v_suite(result, ctx)

    centres, (lo, hi) = first_order_plan(result.domain)
    grid = np.linspace(lo, hi, 1601)
    intertwining = verify_intertwining(result.profile1, result.v2, factor, gaussian_bundle(centres, 0.35), grid)
    bumps = gaussian_bundle(centres, 0.3)
    pairs = list(zip(bumps, bumps)) + list(zip(bumps, bumps[1:]))
    adjoint = adjoint_gap(factor, FactorComposition((factor,), transpose=True), pairs, lo, hi)

    validation_passed = None if result.validation is None else result.validation.passed
    passed = bool(
        max(gaps) <= tol
        and delta_v.passed
        and validation_passed is not False
        and intertwining <= INTERTWINING_TOL
        and adjoint <= ADJOINT_TOL
    )
    if not passed:
        logger.warning(f"{result.v2.label}: transform suite failed (bookkeeping {max(gaps):.3e}, "
                       f"intertwining {intertwining:.3e}, adjoint {adjoint:.3e})")
    return Lemma10Report(lam=ctx.value, symbolic=result.symbolic, bookkeeping=gaps, bookkeeping_tol=tol,
                         delta_v=delta_v, validation_passed=validation_passed, intertwining=intertwining,
                         adjoint=adjoint, passed=passed)


@dataclass(frozen=True)
class IntertwinerReport:
    order: int
    segments: List[Segment]
    composition_gap: float
    annihilation: List[float]
    partner_gap: float
    intertwining: float
    transpose_intertwining: float
    adjoint: float
    intermediate_passed: List[Optional[bool]]
    passed: bool


def intertwiner_suite(q: IntertwinerN) -> IntertwinerReport:
    """Determinant action against the factor composition, kernel, partner potential and both intertwining laws."""
    factorization = factorize_chain(q)
    composed = FactorComposition(factorization.factors)
    q_plus = transpose_action(factorization.factors)
    h_plus = q.profile
    h_minus = q.partner_profile()

    centres, (lo, hi) = segment_plan(q.segments)
    x = np.linspace(lo, hi, 1201)
    bundle = gaussian_bundle(centres, 0.35)

    composition = 0.0
    for f in bundle:
        fjet = expression_jet(f, x, q.order)
        direct = q.apply(fjet, x)
        composition = max(composition, float(np.max(np.abs(direct - composed.apply(fjet, x)))
                                              / max(np.max(np.abs(direct)), 1e-300)))

    points = np.concatenate([interior_points(a, b) for a, b in q.segments])
    annihilation = []
    for entry in q.basis.entries:
        for j in range(entry.k):
            jet = member_jet(entry.members, j, h_plus, entry.lam.value, points, q.order)
            annihilation.append(float(np.max(np.abs(q.apply(jet, points))) / np.max(np.abs(jet[0]))))

    v2 = q.partner_jet(x, 0)[0]
    partner_gap = float(np.max(np.abs(v2 - stepwise_partner(factorization, x))) / np.max(np.abs(v2)))

    intertwining = verify_intertwining(h_plus, h_minus, q, bundle, x)
    transposed = verify_intertwining(h_minus, h_plus, q_plus, bundle, x)
    bumps = gaussian_bundle(centres, 0.15)
    adjoint = adjoint_gap(q, q_plus, list(zip(bumps, bumps)) + list(zip(bumps, bumps[1:])), lo, hi)

    intermediate = [None if v is None else v.passed for v in factorization.validations]
    passed = bool(
        composition <= COMPOSITION_TOL
        and max(annihilation) <= ANNIHILATION_TOL
        and partner_gap <= PARTNER_TOL
        and intertwining <= INTERTWINING_TOL_N
        and transposed <= INTERTWINING_TOL_N
        and adjoint <= ADJOINT_TOL
        and False not in intermediate
    )
    if not passed:
        logger.warning(f"Order-{q.order} intertwiner on {h_plus.label} failed: composition {composition:.3e}, "
                       f"partner {partner_gap:.3e}, intertwining {intertwining:.3e}/{transposed:.3e}")
    return IntertwinerReport(order=q.order, segments=list(q.segments), composition_gap=composition,
                             annihilation=annihilation, partner_gap=partner_gap, intertwining=intertwining,
                             transpose_intertwining=transposed, adjoint=adjoint, intermediate_passed=intermediate,
                             passed=passed)


@dataclass(frozen=True)
class ChainMappingReport:
    lemma2: Lemma2Report
    corollary6: Corollary6Report
    monotone: bool
    passed: bool


def chain_mapping_suite(result: TransformResult, chain: JordanChain) -> ChainMappingReport:
    """q1- on a Jordan chain: killed prefix, image chain of h-, preserved verdicts and monotone kinds."""
    spans = [trusted_span(m) for m in chain.members]
    span = (max([result.domain[0]] + [s[0] for s in spans]), min([result.domain[1]] + [s[1] for s in spans]))
    lemma2 = lemma2_check(result.factor, chain, result.profile1, result.v2, span)
    corollary6 = corollary6_check(result, chain)
    monotone = corollary7_check(chain).passed
    return ChainMappingReport(lemma2=lemma2, corollary6=corollary6, monotone=monotone,
                              passed=lemma2.passed and corollary6.passed and monotone)
