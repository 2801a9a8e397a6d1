import numpy as np
import pytest

from jordan.fixtures import first_order_fixture, one_sided_fixture, oscillator_profile, second_order_fixture
from potential.branch import SpectralValue, compute_R2
from potential.expression import parse_potential
from potential.profile import PotentialProfile


def make_profile(text: str, R0: float = 1.0, eps: float = 0.5, Xmax: float = 30.0) -> PotentialProfile:
    return PotentialProfile.from_expression(parse_potential(text), R0, eps, Xmax)


@pytest.fixture(scope="session")
def oscillator():
    return oscillator_profile()


@pytest.fixture(scope="session")
def quartic():
    return make_profile("x^4")


@pytest.fixture(scope="session")
def ctx_minus_one(oscillator):
    return compute_R2(oscillator, SpectralValue(-1 + 0j))


@pytest.fixture(scope="session")
def ctx_i(oscillator):
    return compute_R2(oscillator, SpectralValue(1j))


@pytest.fixture(scope="session")
def first_order():
    return first_order_fixture()


@pytest.fixture(scope="session")
def second_order():
    return second_order_fixture()


@pytest.fixture(scope="session")
def one_sided():
    return one_sided_fixture()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
