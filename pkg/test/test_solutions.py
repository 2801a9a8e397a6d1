import numpy as np
import pytest
from scipy.special import erfcx

from potential.branch import Direction, SpectralValue, compute_R2
from solutions.asymptotics import asymptotic_ratio_test
from solutions.bilinear import bilinear_symmetry_check
from solutions.chains import build_associated_chain, corollary7_check, interior_points, ladder_check
from solutions.formal import FormalSolution, Kind, Verdict, classified, mirror, proportionality, trusted_span
from solutions.suites import lemma8_suite, lemma9_suite
from solutions.zero_modes import build_decaying_ode, build_growing, normalize_growing, wronskian
from utils.errors import NotNormalizableError, SeedError


@pytest.fixture(scope="module")
def zero_modes_minus_one(oscillator, ctx_minus_one):
    phi0 = build_decaying_ode(oscillator, ctx_minus_one, Direction.UP)
    return phi0, build_growing(phi0, oscillator, ctx_minus_one)


def test_decaying_zero_mode_matches_the_erfc_solution(zero_modes_minus_one):
    phi0, _ = zero_modes_minus_one
    x = np.linspace(3.0, 6.0, 61)
    # e^{x^2/2} int_x^inf e^{-t^2} dt, up to a constant
    exact = erfcx(x) * np.exp(-x ** 2 / 2)
    _, deviation = proportionality(np.asarray(phi0(x)[0]), exact)
    assert deviation <= 1e-6


def test_wronskian_of_the_zero_mode_pair(zero_modes_minus_one):
    phi0, hat0 = zero_modes_minus_one
    w = wronskian(hat0, phi0, interior_points(*trusted_span(hat0)))
    assert np.max(np.abs(w - 2.0)) / 2.0 <= 1e-6


def test_zero_mode_verdicts(zero_modes_minus_one):
    phi0, hat0 = zero_modes_minus_one
    assert phi0.kind is Kind.DECAYING and hat0.kind is Kind.GROWING
    assert phi0.norm.at("up") is Verdict.YES
    assert hat0.norm.at("up") is Verdict.NO


def test_down_construction_mirrors_up(oscillator, ctx_minus_one, zero_modes_minus_one):
    phi0, _ = zero_modes_minus_one
    down = build_decaying_ode(oscillator, ctx_minus_one, Direction.DOWN)
    assert down.direction is Direction.DOWN
    x = np.linspace(3.0, 6.0, 31)
    # V is even, so the down mode is the reflected up mode
    _, deviation = proportionality(np.asarray(down(-x)[0]), np.asarray(phi0(x)[0]))
    assert deviation <= 1e-6
    psi, dpsi = mirror(phi0)(-x)
    assert np.allclose(psi, phi0(x)[0]) and np.allclose(dpsi, -np.asarray(phi0(x)[1]))


@pytest.mark.parametrize("lam", [-1, 1j])
@pytest.mark.parametrize("potential", ["oscillator", "quartic"])
def test_lemma8_suite(request, potential, lam):
    profile = request.getfixturevalue(potential)
    report = lemma8_suite(profile, compute_R2(profile, SpectralValue(complex(lam))))
    assert report.series_vs_ode <= 1e-6
    assert report.wronskian_dev <= 1e-6
    assert report.passed


@pytest.mark.slow
@pytest.mark.parametrize("lam", [-1, 1j])
def test_lemma9_suite_on_the_oscillator(oscillator, lam):
    report = lemma9_suite(oscillator, compute_R2(oscillator, SpectralValue(complex(lam))), n_max=2)
    assert max(report.decaying_residuals) <= 1e-6
    assert report.decaying_verdicts == ["yes"] * 3
    assert report.growing_verdicts == ["no"] * 3
    assert report.passed


@pytest.mark.slow
def test_chain_links_and_asymptotics(oscillator, ctx_i):
    decaying, growing = build_associated_chain(oscillator, ctx_i, Direction.UP, 2)
    assert [m.order for m in decaying.members] == [0, 1, 2]
    assert max(decaying.link_residuals) <= 1e-6
    assert max(growing.link_residuals) <= 1e-6
    assert corollary7_check(decaying).passed
    assert ladder_check(decaying, oscillator).passed
    for member in decaying.members:
        assert asymptotic_ratio_test(member, oscillator, ctx_i, decaying.variant).passed


def test_negative_chain_length_is_refused(oscillator, ctx_minus_one):
    with pytest.raises(ValueError):
        build_associated_chain(oscillator, ctx_minus_one, Direction.UP, -1)


def test_bilinear_form_is_symmetric(oscillator):
    ground = classified(FormalSolution.from_expression("exp(-x^2/2)", 1.0, 6.0, label="ground"), oscillator)
    first = classified(FormalSolution.from_expression("x*exp(-x^2/2)", 3.0, 6.0, label="first"), oscillator)
    assert bilinear_symmetry_check(ground, first, oscillator) <= 1e-6


def test_bilinear_form_needs_normalizable_functions(oscillator):
    ground = classified(FormalSolution.from_expression("exp(-x^2/2)", 1.0, 6.0), oscillator)
    growing = classified(FormalSolution.from_expression("exp(x^2/2)", -1.0, 6.0), oscillator)
    with pytest.raises(NotNormalizableError):
        bilinear_symmetry_check(ground, growing, oscillator)


def test_growing_normalization_fixes_wronskian_and_base(zero_modes_minus_one):
    phi0, hat0 = zero_modes_minus_one
    lo, hi = trusted_span(hat0)
    base = 0.5 * (lo + hi)
    normalized = normalize_growing(hat0, phi0, base)
    assert abs(complex(normalized(base)[0])) <= 1e-6 * abs(complex(hat0(base)[0]))
    w = wronskian(normalized, phi0, np.linspace(base - 0.25, base + 0.25, 11))
    assert np.max(np.abs(w - 2.0)) / 2.0 <= 1e-6


def test_growing_companion_needs_a_decaying_seed(oscillator, ctx_minus_one, zero_modes_minus_one):
    _, hat0 = zero_modes_minus_one
    with pytest.raises(SeedError):
        build_growing(hat0, oscillator, ctx_minus_one)
