import mpmath
import numpy as np
import pytest

from potential.branch import SpectralValue, compute_R2
from quadrature.functionals import I1, Variant, detect_variant, lemma6_suite, lemma7_suite
from quadrature.gauss import cumulative_integral, segment_integrals
from quadrature.grid import Grid
from quadrature.improper import decay_exponent, doubling_windows, envelope_bounded, improper_integral
from quadrature.ode import integrate_schrodinger, piecewise
from utils.errors import DivergenceError

mpmath.mp.dps = 30


def oracle(f, a, b=mpmath.inf) -> complex:
    return complex(mpmath.quad(f, [a, b]))


def test_exponential_tail_matches_mpmath():
    result = improper_integral(lambda t: np.exp(-t) * (1 + 1j * np.sin(t)), 1.0)
    expected = oracle(lambda t: mpmath.exp(-t) * (1 + 1j * mpmath.sin(t)), 1)
    assert abs(result.value - expected) <= 1e-8 * abs(expected)


def test_power_tail_is_closed_analytically():
    result = improper_integral(lambda t: t ** -3.0 + 0j, 1.0, x_max=30.0)
    assert result.value.real == pytest.approx(0.5, rel=1e-8)
    assert result.truncated_at == 30.0


def test_left_ray_integral():
    result = improper_integral(lambda t: np.exp(t) + 0j, -2.0, direction="down")
    assert result.value.real == pytest.approx(float(mpmath.exp(-2)), rel=1e-8)


def test_non_decaying_tail_is_refused():
    with pytest.raises(DivergenceError):
        improper_integral(lambda t: 1.0 / t + 0j, 1.0)


def test_cumulative_integral_straddles_the_base():
    xs = np.array([-2.0, -0.5, 0.3, 1.0, 4.0])
    got = cumulative_integral(lambda t: np.cos(t) + 1j * t ** 2, 0.5, xs)
    expected = [oracle(lambda t: mpmath.cos(t) + 1j * t ** 2, 0.5, x) for x in xs]
    assert np.allclose(got, expected, rtol=1e-10, atol=1e-12)


def test_segment_integrals_add_up():
    edges = np.linspace(0.0, 3.0, 7)
    parts, _ = segment_integrals(lambda t: np.exp(t) + 0j, edges)
    assert parts.sum().real == pytest.approx(np.exp(3.0) - 1.0, rel=1e-12)


def test_segment_integrals_keep_relative_accuracy_across_scales():
    edges = np.linspace(0.0, 30.0, 31)
    parts, error = segment_integrals(lambda t: np.exp(t) * (1 + 1j * np.sin(t)), edges)
    expected = np.array([oracle(lambda t: mpmath.exp(t) * (1 + 1j * mpmath.sin(t)), a, b)
                         for a, b in zip(edges[:-1], edges[1:])])
    assert np.all(np.abs(parts - expected) <= 1e-9 * np.abs(expected))
    assert error <= 1e-8 * np.abs(expected).sum()


def test_repeated_points_add_nothing():
    xs = np.array([1.0, 1.0, 2.0, 0.5])
    got = cumulative_integral(lambda t: 1j * t, 0.5, xs)
    assert got[0] == got[1]
    assert np.allclose(got, 0.5j * (xs ** 2 - 0.25), rtol=1e-12, atol=1e-14)


def test_decay_exponent_of_a_power_law():
    w = np.geomspace(1.0, 100.0, 32)
    assert decay_exponent(3.0 * w ** -1.5, w) == pytest.approx(-1.5, abs=1e-12)
    with pytest.raises(ValueError):
        decay_exponent(w[:4], w[:4])


def test_doubling_windows_and_envelope():
    x = np.geomspace(1.0, 64.0, 200)
    maxima = doubling_windows(x, 1.0 / x, 64.0)
    assert maxima == sorted(maxima, reverse=True)
    assert envelope_bounded(maxima)
    assert not envelope_bounded([1.0, 5.0])


def test_growing_solution_of_the_oscillator(oscillator):
    x0 = 1.0
    init = (np.exp(x0 ** 2 / 2), x0 * np.exp(x0 ** 2 / 2))
    traj = integrate_schrodinger(oscillator, -1.0, None, (x0, 5.0), init, 1e-11)
    x = traj.grid.abscissas
    assert np.allclose(traj.psi, np.exp(x ** 2 / 2), rtol=1e-8)


def test_piecewise_dispatch():
    left = lambda x: (np.full(np.shape(x), 1.0 + 0j), np.zeros(np.shape(x), dtype=complex))
    right = lambda x: (np.full(np.shape(x), 2.0 + 0j), np.zeros(np.shape(x), dtype=complex))
    evaluate = piecewise([(0.0, 1.0, right), (-1.0, 0.0, left)])
    psi, _ = evaluate(np.array([-0.5, 0.5]))
    assert list(psi) == [1.0, 2.0]
    with pytest.raises(ValueError):
        evaluate(np.array([3.0]))


def test_grid_rays():
    grid = Grid.geometric(1.0, 8.0, 16)
    assert grid.points_per_side() == 16
    assert grid.ray("down")[0] == -1.0
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 0.0, 1.0]), "both")


def test_variants(oscillator, quartic):
    assert detect_variant(oscillator) is Variant.DIVERGENT
    assert detect_variant(quartic) is Variant.CONVERGENT


def test_I1_decreases_outward(oscillator, ctx_minus_one):
    values = np.asarray(I1(np.array([2.0, 4.0, 8.0]), ctx_minus_one, oscillator))
    assert np.all(np.diff(np.abs(values)) < 0)


@pytest.mark.parametrize("lam", [-1, 1j, 1 + 1j])
@pytest.mark.parametrize("direction", ["up", "down"])
def test_lemma6_envelopes(oscillator, lam, direction):
    report = lemma6_suite(oscillator, compute_R2(oscillator, SpectralValue(complex(lam))), direction)
    assert report.passed
    assert set(report.samples) >= {"x"}


def test_lemma7_on_the_quartic(quartic):
    report = lemma7_suite(quartic, compute_R2(quartic, SpectralValue(-1 + 0j)))
    assert report.triggered
    assert report.abs_integral_converges
    assert report.growth_ratio >= 10.0
    assert report.passed


def test_lemma7_is_vacuous_on_the_oscillator(oscillator, ctx_minus_one):
    report = lemma7_suite(oscillator, ctx_minus_one)
    assert not report.triggered
    assert report.passed
