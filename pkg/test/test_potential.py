import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from potential.branch import Direction, SpectralValue, alpha, branch_power, compute_R2, eta, hat_alpha, xi_abs
from potential.estimates import lemma5_suite, linearity_gap
from potential.expression import X, differentiate, parse_complex, parse_potential, to_text
from potential.profile import validate_class
from quadrature.grid import Grid
from conftest import make_profile
from utils.errors import AdmissibilityError, BranchError, GridTooCoarseError, ParseError, UnknownIdentifierError

XS = np.linspace(-3.0, 3.0, 41)

coefficients = st.integers(min_value=-9, max_value=9)
powers = st.integers(min_value=0, max_value=6)


@st.composite
def polynomial_texts(draw):
    terms = draw(st.lists(st.tuples(coefficients, powers), min_size=1, max_size=4))
    imaginary = draw(st.booleans())
    text = " + ".join(f"({c})*x^{n}" for c, n in terms)
    return text + (" + i*x" if imaginary else "")


@given(polynomial_texts())
@settings(max_examples=60, deadline=None)
def test_printed_expression_parses_back_to_the_same_tree(text):
    expr = parse_potential(text)
    again = parse_potential(expr.text)
    assert sp.simplify(again.root - expr.root) == 0


@given(polynomial_texts(), polynomial_texts(),
       st.complex_numbers(min_magnitude=0.1, max_magnitude=5.0, allow_nan=False, allow_infinity=False))
@settings(max_examples=40, deadline=None)
def test_differentiate_is_linear(f_text, g_text, a):
    f, g = parse_potential(f_text), parse_potential(g_text)
    assert linearity_gap(a, f, g, XS) <= 1e-9


@given(st.floats(min_value=-np.pi + 1e-3, max_value=np.pi - 1e-3),
       st.floats(min_value=1e-3, max_value=1e3),
       st.sampled_from([0.5, -0.25, 0.25]))
@settings(max_examples=100, deadline=None)
def test_branch_power_follows_the_principal_branch(arg, modulus, kappa):
    z = modulus * np.exp(1j * arg)
    w = branch_power(z, kappa)
    assert abs(w) == pytest.approx(modulus ** kappa, rel=1e-12)
    assert np.angle(w) == pytest.approx(kappa * arg, abs=1e-12)


def test_branch_power_refuses_the_cut():
    with pytest.raises(BranchError):
        branch_power(-4.0 + 0j, 0.5)


def test_derivatives_of_closed_forms():
    expr = parse_potential("x^4 - 3*x^2 + i*x")
    assert sp.simplify(differentiate(expr).root - (4 * X ** 3 - 6 * X + sp.I)) == 0
    assert sp.simplify(differentiate(expr, 2).root - (12 * X ** 2 - 6)) == 0


def test_decimal_literals_are_exact():
    assert parse_potential("0.5*x^2").root == sp.Rational(1, 2) * X ** 2
    assert parse_complex("-3+2*i") == -3 + 2j


def test_functions_print_in_the_grammar():
    text = to_text(parse_potential("exp(x) + ln(x) + sqrt(x) + cos(x)").root)
    for name in ("exp(", "ln(", "sqrt(", "cos("):
        assert name in text


def test_parse_error_reports_the_byte_offset():
    with pytest.raises(ParseError) as info:
        parse_potential("x^2$")
    assert info.value.offset == 3


def test_unknown_identifier_names_the_offender():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_potential("x^2 + y")
    assert info.value.name == "y"
    assert info.value.offset == 6


def test_non_integer_exponent_is_rejected():
    with pytest.raises(ParseError):
        parse_potential("x^0.5")


@pytest.mark.parametrize("text, R0", [
    ("x^2", 1.0),
    ("x^4", 1.0),
    ("x^2 + i*x", 1.0),
    ("x^4 - 3*x^2", 2.0),
    ("x^4 + i*x^3", 1.0),
])
def test_class_members_validate(text, R0):
    profile = make_profile(text, R0=R0, Xmax=30 * R0)
    report = validate_class(profile, profile.default_grid())
    assert report.passed, report.failures


def test_imaginary_quadratic_fails_positivity():
    profile = make_profile("i*x^2")
    report = validate_class(profile, profile.default_grid())
    assert not report.passed
    assert report.failures[0][0] == "2"


def test_coarse_grid_is_refused(oscillator):
    with pytest.raises(GridTooCoarseError):
        validate_class(oscillator, Grid.geometric(1.0, 30.0, 10))


def test_admissibility():
    assert SpectralValue(-1 + 0j).admissible
    assert SpectralValue(0j).admissible
    assert SpectralValue(1 + 1j).admissible
    assert not SpectralValue(2 + 0j).admissible
    with pytest.raises(AdmissibilityError):
        SpectralValue(2 + 0j).require_admissible()


def test_branch_radius_is_R0_for_real_lambda(oscillator, ctx_minus_one):
    assert ctx_minus_one.R1 == oscillator.R0


def test_branch_radius_grows_for_complex_lambda(oscillator):
    ctx = compute_R2(oscillator, SpectralValue(-3 + 2j))
    assert ctx.R1 >= oscillator.R0
    assert ctx.R2 == ctx.R1


def test_xi_of_the_oscillator(oscillator):
    x = np.array([2.0, 4.0, 8.0])
    # int_R0^x t dt
    assert np.allclose(xi_abs(x, oscillator, Direction.UP), 0.5 * (x ** 2 - 1.0), rtol=1e-8)


@pytest.mark.parametrize("lam", [-1, -10, 1j, 1 + 1j, -3 + 2j])
def test_lemma5_estimates_on_the_oscillator(oscillator, lam):
    report = lemma5_suite(oscillator, compute_R2(oscillator, SpectralValue(complex(lam))))
    assert report.passed
    assert report.C1_hat > 0 and report.C2_hat > 0 and report.C3_hat > 0


def test_alpha_of_the_oscillator(oscillator, ctx_minus_one):
    x = np.array([1.5, 3.0, 10.0])
    f = x ** 2 + 1.0
    expected = (5.0 / 16.0) * 4 * x ** 2 / f ** 2.5 - 0.5 / f ** 1.5
    assert np.allclose(alpha(x, ctx_minus_one, oscillator), expected, rtol=1e-12)
    assert np.all(np.abs(alpha(x, ctx_minus_one, oscillator)) <= hat_alpha(x, ctx_minus_one, oscillator))


def test_eta_of_the_oscillator(oscillator):
    x = np.array([2.0, 5.0, 20.0])
    # int_R0^x dt / t
    assert np.allclose(eta(-x, oscillator, Direction.DOWN), np.log(x), rtol=1e-8)
