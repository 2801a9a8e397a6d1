"""Harmonic-oscillator fixtures with known spectra: one first-order and two kernel bases for the index balance."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from darboux.first_order import TransformResult, darboux_once
from darboux.intertwiner import IntertwinerN, StrippingFlag, build_intertwiner, dual_basis
from jordan.basis import BasisEntry, CanonicalBasis
from potential.branch import BranchContext, Direction, SpectralValue, compute_R2
from potential.expression import parse_potential
from potential.profile import PotentialProfile
from quadrature.ode import integrate_schrodinger, piecewise, sample
from solutions.chains import JordanChain, build_associated_chain
from solutions.formal import FormalSolution, Kind, classified, extend_to_axis
from solutions.zero_modes import build_decaying_ode
from utils.logging import logger

# Sampled reach of the closed-form oscillator fixtures
FIXTURE_REACH = 8.0
_FIXTURE_TOL = 1e-11


def oscillator_profile() -> PotentialProfile:
    return PotentialProfile.from_expression(parse_potential("x^2"), R0=1.0, eps=0.5)


def first_order_fixture(profile: Optional[PotentialProfile] = None) -> TransformResult:
    """x^2 with phi = exp(x^2/2) at lambda = -1; the partner is x^2 - 2."""
    profile = profile or oscillator_profile()
    phi = FormalSolution.from_expression("exp(x^2/2)", -1.0, FIXTURE_REACH, label="exp(x^2/2)")
    return darboux_once(profile, phi)


def next_associate(profile: PotentialProfile, phi: FormalSolution, reach: float = FIXTURE_REACH,
                   label: str = "") -> FormalSolution:
    """psi with (h - lam) psi = phi and psi(0) = psi'(0) = 0, integrated out to both ends."""
    lam = phi.lam.value
    source = lambda s: phi(s)[0]
    right = integrate_schrodinger(profile, lam, source, (0.0, reach), (0.0, 0.0), _FIXTURE_TOL, atol=1e-14)
    left = integrate_schrodinger(profile, lam, source, (0.0, -reach), (0.0, 0.0), _FIXTURE_TOL, atol=1e-14)
    dense = piecewise([(0.0, reach, right.dense), (-reach, 0.0, left.dense)])
    xs = np.concatenate([left.grid.abscissas[:-1], right.grid.abscissas])
    return FormalSolution(order=phi.order + 1, lam=phi.lam, direction=Direction.UP, kind=Kind.GROWING,
                          traj=sample(dense, xs, _FIXTURE_TOL), reach=(reach, reach),
                          label=label or f"phi_(0,{phi.order + 1})")


def second_order_basis(profile: Optional[PotentialProfile] = None) -> CanonicalBasis:
    """{exp(x^2/2), phi_1} at lambda = -1; both grow at both infinities."""
    profile = profile or oscillator_profile()
    phi0 = FormalSolution.from_expression("exp(x^2/2)", -1.0, FIXTURE_REACH, label="phi_(0,0)")
    phi1 = next_associate(profile, phi0)
    members = (classified(phi0, profile), classified(phi1, profile))
    return CanonicalBasis(entries=(BasisEntry(lam=SpectralValue(-1 + 0j), members=members),), side="minus",
                          profile=profile, segments=((-FIXTURE_REACH, FIXTURE_REACH),))


@dataclass(frozen=True, eq=False)
class KernelFixture:
    """An intertwiner with both kernel bases and the multiplicities of lam in the two spectra."""

    q: IntertwinerN
    dual: CanonicalBasis
    lam: complex
    nu_plus: int
    nu_minus: int


def second_order_fixture(profile: Optional[PotentialProfile] = None) -> KernelFixture:
    """-1 is no oscillator level; the partner gains two levels there, both from the dual kernel."""
    q = build_intertwiner(second_order_basis(profile), StrippingFlag(cannot_be_stripped=True))
    return KernelFixture(q=q, dual=dual_basis(q), lam=-1 + 0j, nu_plus=0, nu_minus=2)


@dataclass(frozen=True, eq=False)
class OneSidedFixture:
    kernel: KernelFixture
    transform: TransformResult
    ctx: BranchContext
    chain: JordanChain


def one_sided_fixture(profile: Optional[PotentialProfile] = None, n_max: int = 2) -> OneSidedFixture:
    """lambda = i on x^2: phi decays at +inf only, its dual 1/phi at -inf only."""
    profile = profile or oscillator_profile()
    ctx = compute_R2(profile, SpectralValue(1j))
    phi0 = build_decaying_ode(profile, ctx, Direction.UP)
    whole = classified(extend_to_axis(phi0, profile), profile)
    basis = CanonicalBasis(entries=(BasisEntry(lam=ctx.lam, members=(whole,)),), side="minus", profile=profile)
    q = build_intertwiner(basis, StrippingFlag(cannot_be_stripped=True))
    chain, _ = build_associated_chain(profile, ctx, Direction.UP, n_max, phi0=phi0)
    logger.info(f"Built one-sided fixture at lambda={ctx.lam} on {profile.label}")
    return OneSidedFixture(kernel=KernelFixture(q=q, dual=dual_basis(q), lam=1j, nu_plus=0, nu_minus=0),
                           transform=darboux_once(profile, whole), ctx=ctx, chain=chain)
