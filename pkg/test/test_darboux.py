from dataclasses import replace

import numpy as np
import pytest
import sympy as sp

from darboux.first_order import darboux_once, delta_v_suite
from darboux.intertwiner import build_intertwiner, factorize_chain, stepwise_partner, transpose_action
from darboux.jets import expression_jet, find_zeros, wronskian_derivatives
from darboux.operators import gaussian_bundle, verify_intertwining
from darboux.suites import chain_mapping_suite, intertwiner_suite, lemma10_suite, segment_plan
from jordan.basis import BasisEntry, CanonicalBasis
from potential.branch import Direction, SpectralValue, compute_R2
from potential.expression import X
from solutions.formal import FormalSolution
from solutions.zero_modes import build_decaying_ode
from utils.errors import AdmissibilityError, ResidualError, WronskianZeroError, ZeroInDomainError

GAUSSIAN = sp.exp(-X ** 2 / 2)


def test_symbolic_partner_of_the_oscillator(first_order):
    assert first_order.symbolic
    assert sp.simplify(first_order.v2.expr.root - (X ** 2 - 2)) == 0
    x = np.linspace(-6.0, 6.0, 241)
    assert np.max(np.abs(np.asarray(first_order.v2.v(x)) - (x ** 2 - 2))) <= 1e-10


def test_numeric_partner_of_the_oscillator(oscillator, first_order):
    phi = replace(first_order.factor.phi, expr=None)
    numeric = darboux_once(oscillator, phi)
    assert not numeric.symbolic
    x = np.linspace(-6.0, 6.0, 241)
    assert np.max(np.abs(np.asarray(numeric.v2.v(x)) - (x ** 2 - 2))) <= 1e-10
    assert np.allclose(numeric.delta_v(x), -2.0, atol=1e-10)


def test_intertwining_of_the_first_order_factor(oscillator, first_order):
    x = np.linspace(-4.0, 4.0, 1601)
    bundle = gaussian_bundle([-1.5, -0.5, 0.0, 0.7, 1.6], 0.35)
    assert verify_intertwining(oscillator, first_order.v2, first_order.factor, bundle, x) <= 1e-6


def test_ground_state_maps_to_the_first_excited_state(first_order):
    x = np.linspace(-4.0, 4.0, 401)
    image = first_order.factor.apply(expression_jet(GAUSSIAN, x, 1), x)
    target = x * np.exp(-x ** 2 / 2)
    scale = np.vdot(target, image) / np.vdot(target, target)
    assert np.max(np.abs(image - scale * target)) / np.max(np.abs(image)) <= 1e-8
    # eigenfunction of h- = -d^2 + x^2 - 2 at eigenvalue 1
    psi = X * GAUSSIAN
    assert sp.simplify(-sp.diff(psi, X, 2) + (X ** 2 - 2) * psi - psi) == 0


def test_first_order_suite(first_order, ctx_minus_one):
    report = lemma10_suite(first_order, ctx_minus_one)
    assert report.bookkeeping_tol == 1e-8
    assert max(report.bookkeeping) <= 1e-8
    assert report.intertwining <= 1e-6
    assert report.adjoint <= 1e-6
    assert report.passed


def test_partner_asymptotics_of_the_oscillator(first_order, ctx_minus_one):
    report = delta_v_suite(first_order, ctx_minus_one)
    assert set(report.checks) == {"a21", "a22", "a23", "a24", "a25", "a26"}
    assert report.passed


@pytest.mark.slow
def test_partner_asymptotics_of_the_quartic(quartic):
    ctx = compute_R2(quartic, SpectralValue(-1 + 0j))
    result = darboux_once(quartic, build_decaying_ode(quartic, ctx, Direction.UP))
    report = delta_v_suite(result, ctx)
    covered = {k for k, c in report.checks.items() if c.covered}
    assert {"a21", "a25"} <= covered
    assert report.passed


def test_suite_refuses_positive_lambda(oscillator):
    phi = FormalSolution.from_expression("exp(-x^2/2)", 1.0, 6.0)
    with pytest.raises(ZeroInDomainError):
        darboux_once(oscillator, FormalSolution.from_expression("x*exp(-x^2/2)", 3.0, 6.0))
    result = darboux_once(oscillator, phi)
    assert not result.admissible
    with pytest.raises(AdmissibilityError):
        lemma10_suite(result, replace(compute_R2(oscillator, SpectralValue(-1 + 0j)), lam=SpectralValue(1 + 0j)))


def test_non_zero_mode_is_refused(oscillator, first_order):
    with pytest.raises(ResidualError):
        darboux_once(oscillator, first_order.factor.phi, lam=-2.0)


def test_wronskian_determinant_is_linear(second_order, rng):
    q = second_order.q
    centres, (lo, hi) = segment_plan(q.segments)
    x = np.linspace(lo, hi, 301)
    f, g = gaussian_bundle(centres[:2], 0.5)
    a = complex(*rng.normal(size=2))
    combined = q.apply(expression_jet(a * f + g, x, q.order), x)
    separate = a * q.apply(expression_jet(f, x, q.order), x) + q.apply(expression_jet(g, x, q.order), x)
    assert np.max(np.abs(combined - separate)) <= 1e-9 * np.max(np.abs(separate))


def test_wronskian_of_exponentials():
    x = np.linspace(-1.0, 1.0, 11)
    jets = [expression_jet(sp.exp(k * X), x, 2) for k in (1, 2)]
    w, dw = wronskian_derivatives(jets, 1)
    # W(e^x, e^2x) = e^3x
    assert np.allclose(w, np.exp(3 * x)) and np.allclose(dw, 3 * np.exp(3 * x))


def test_second_order_intertwiner(second_order):
    report = intertwiner_suite(second_order.q)
    assert report.order == 2
    assert report.composition_gap <= 1e-5
    assert max(report.annihilation) <= 1e-8
    assert report.partner_gap <= 1e-6
    assert report.intertwining <= 1e-5
    assert report.passed


def test_factorization_reproduces_the_partner(second_order):
    q = second_order.q
    factorization = factorize_chain(q)
    assert len(factorization.factors) == 2
    _, (lo, hi) = segment_plan(q.segments)
    x = np.linspace(lo, hi, 201)
    v2 = q.partner_jet(x, 0)[0]
    assert np.max(np.abs(v2 - stepwise_partner(factorization, x))) <= 1e-6 * np.max(np.abs(v2))


def test_order_one_wronskian_is_the_first_order_factor(one_sided):
    q, factor = one_sided.kernel.q, one_sided.transform.factor
    lo, hi = max(q.segments, key=lambda s: s[1] - s[0])
    x = np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 201)
    jet = expression_jet(sp.exp(-(X - 0.5) ** 2), x, 1)
    direct, factored = q.apply(jet, x), factor.apply(jet, x)
    assert np.max(np.abs(direct - factored)) <= 1e-8 * np.max(np.abs(direct))


def test_vanishing_wronskian_outside_R0_is_refused(oscillator):
    sol = FormalSolution.from_expression("x^2 - 4", -1.0, 8.0)
    basis = CanonicalBasis(entries=(BasisEntry(lam=SpectralValue(-1 + 0j), members=(sol,)),), side="minus",
                           profile=oscillator)
    with pytest.raises(WronskianZeroError) as info:
        build_intertwiner(basis)
    assert np.allclose(sorted(info.value.zeros), [-2.0, 2.0], atol=1e-2)


def test_find_zeros_brackets_sign_changes():
    x = np.linspace(-3.0, 3.0, 600)
    zeros = find_zeros(x, x ** 2 - 1.0 + 0j)
    assert np.allclose(sorted(zeros), [-1.0, 1.0], atol=1e-2)


@pytest.mark.slow
def test_chain_mapping_at_lambda_i(one_sided):
    report = chain_mapping_suite(one_sided.transform, one_sided.chain)
    assert report.lemma2.m == 1
    assert report.lemma2.killed == [True, False, False]
    assert max(report.lemma2.residuals) <= 1e-5
    assert report.corollary6.passed
    assert report.passed


def test_transpose_kills_the_reciprocal_zero_mode(first_order):
    x = np.linspace(-4.0, 4.0, 201)
    q_plus = transpose_action([first_order.factor])
    # (-d + chi) e^{-x^2/2} with chi = -x
    image = q_plus.apply(expression_jet(GAUSSIAN, x, 1), x)
    assert np.max(np.abs(image)) <= 1e-8
