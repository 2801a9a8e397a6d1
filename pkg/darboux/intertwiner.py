"""Nth-order intertwiners q_N- f = W(phi_1..phi_N, f) / W(phi_1..phi_N), their factorization and transpose."""
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config.constants import MAX_INTERTWINER_ORDER
from config.settings import settings
from darboux.first_order import KILL_TOL, FirstOrderFactor, grid_side, outer_radius
from darboux.jets import (
    Jet,
    chi_jet,
    find_zeros,
    leibniz,
    log_derivatives,
    member_jet,
    potential_jet,
    wronskian_derivatives,
)
from darboux.operators import FactorComposition
from jordan.basis import BasisEntry, CanonicalBasis, Segment
from potential.branch import Direction
from potential.profile import KReport, PotentialProfile, validate_class
from quadrature.grid import Grid
from quadrature.ode import fd_step, sample, second_difference
from solutions.chains import JordanChain, interior_points
from solutions.formal import FormalSolution, Kind, classified, proportionality
from utils.errors import FactorizationError, WronskianZeroError
from utils.logging import logger

_SCAN_SAMPLES = 4096


@dataclass(frozen=True)
class StrippingFlag:
    """User-declared: q_N- cannot be stripped off (no first-order factor can be split from its right)."""

    cannot_be_stripped: bool = False


def _segment_points(segments: Sequence[Segment], n: int) -> np.ndarray:
    return np.concatenate([np.linspace(lo, hi, n) for lo, hi in segments])


def _side_of(segments: Sequence[Segment]) -> List[Direction]:
    sides = []
    if any(hi > 0 for _, hi in segments):
        sides.append(Direction.UP)
    if any(lo < 0 for lo, _ in segments):
        sides.append(Direction.DOWN)
    return sides


@dataclass(frozen=True, eq=False)
class IntertwinerN:
    basis: CanonicalBasis
    segments: Tuple[Segment, ...]
    stripping: StrippingFlag = field(default_factory=StrippingFlag)
    factors: Tuple[FirstOrderFactor, ...] = ()

    @property
    def order(self) -> int:
        return self.basis.N

    @property
    def profile(self) -> PotentialProfile:
        return self.basis.profile

    def basis_jets(self, x: np.ndarray, order: int) -> List[Jet]:
        x = np.asarray(x, dtype=float)
        vjet = potential_jet(self.profile, x, max(order - 2, 0))
        return [member_jet(entry.members, j, self.profile, entry.lam.value, x, order, vjet)
                for entry in self.basis.entries for j in range(entry.k)]

    def wronskian(self, x: np.ndarray, k: int = 0) -> List[np.ndarray]:
        """W, W', ..., W^(k) of the basis."""
        return wronskian_derivatives(self.basis_jets(x, self.order - 1 + k), k)

    def apply(self, jet: Jet, x: np.ndarray) -> np.ndarray:
        """q_N- on a jet of order >= N: (N+1)x(N+1) Wronskian with f appended, over W."""
        jets = self.basis_jets(x, self.order)
        numerator = wronskian_derivatives(jets + [jet[:self.order + 1]])[0]
        return numerator / wronskian_derivatives(jets)[0]

    def partner_jet(self, x: np.ndarray, order: int) -> Jet:
        """V2 = V1 - 2 (ln W)'' and up to two of its derivatives."""
        if order > 2:
            raise ValueError("partner potential derivatives are available up to second order")
        logs = log_derivatives(self.wronskian(x, order + 2))
        vjet = potential_jet(self.profile, np.asarray(x, dtype=float), order)
        return np.array([vjet[m] - 2.0 * logs[m + 1] for m in range(order + 1)])

    def partner_profile(self) -> PotentialProfile:
        """h- potential on the outer part of the working segments, R0 moved out to Re V2 >= eps/2."""
        sides = _side_of(self.segments)
        inner, extent = _radii(self)
        eps = 0.5 * self.profile.eps
        v = lambda s: self.partner_jet(s, 0)[0]
        return _numeric(v, lambda s: self.partner_jet(s, 1)[1], lambda s: self.partner_jet(s, 2)[2],
                        outer_radius(v, inner, extent, eps, sides), eps, extent, sides,
                        f"W-transform of {self.profile.label} (N={self.order})")


def _shrink(segments: Sequence[Segment], zeros: Sequence[float], r0: float) -> Tuple[Segment, ...]:
    """Drop the pieces of each segment cut off by zeros inside |x| < r0."""
    out = []
    for lo, hi in segments:
        cuts = sorted(z for z in zeros if lo < z < hi)
        if not cuts:
            out.append((lo, hi))
            continue
        margin = 0.03 * max(1.0, max(abs(c) for c in cuts))
        if lo < -r0:
            out.append((lo, min(cuts[0] - margin, -r0)))
        if hi > r0:
            out.append((max(cuts[-1] + margin, r0), hi))
    return tuple((a, b) for a, b in out if b > a)


def build_intertwiner(basis: CanonicalBasis, stripping: Optional[StrippingFlag] = None,
                      segments: Optional[Sequence[Segment]] = None) -> IntertwinerN:
    """Wronskian intertwiner of a canonical basis; zeros of W near the origin shrink the working domain."""
    if basis.side != "minus":
        raise ValueError("the intertwiner is built from the kernel basis of q_N- (side 'minus')")
    if not 1 <= basis.N <= MAX_INTERTWINER_ORDER:
        raise ValueError(f"intertwiner order must lie in 1..{MAX_INTERTWINER_ORDER}, got {basis.N}")
    segments = tuple(segments or basis.segments)
    q = IntertwinerN(basis=basis, segments=segments, stripping=stripping or StrippingFlag())
    x = _segment_points(segments, _SCAN_SAMPLES)
    zeros = find_zeros(x, q.wronskian(x)[0])
    if zeros:
        outer = [z for z in zeros if abs(z) >= basis.profile.R0]
        if outer:
            raise WronskianZeroError("W vanishes (basis not canonical or domain too wide)", outer)
        segments = _shrink(segments, zeros, basis.profile.R0)
        if not segments:
            raise WronskianZeroError("W vanishes on every working segment", zeros)
        logger.warning(f"W has zeros at {', '.join(f'{z:.4g}' for z in zeros)} inside R0; working domain shrunk "
                       f"to {', '.join(f'[{a:.4g}, {b:.4g}]' for a, b in segments)}")
        q = replace(q, segments=segments)
    logger.info(f"Built order-{basis.N} intertwiner on {basis.profile.label} over {len(segments)} segment(s)")
    return q


class _Ladder:
    """Stepwise zero modes u_j = r_(j-1) ... r_1 phi_j and the intermediate potentials, evaluated on demand."""

    def __init__(self, q: IntertwinerN):
        self.q = q
        self.lams = [entry.lam for entry in q.basis.entries for _ in range(entry.k)]

    def __call__(self, x: np.ndarray, k: int) -> Tuple[List[np.ndarray], List[Jet], List[np.ndarray]]:
        """chi_j, the jets (order k) of V^(0), ..., V^(N), and the zero modes u_j at x."""
        n = self.q.order
        top = k + n
        x = np.asarray(x, dtype=float)
        vjet = potential_jet(self.q.profile, x, top)
        jets = self.q.basis_jets(x, top + 1)
        chis, potentials, modes = [], [vjet[:k + 1]], []
        for step in range(n):
            u = jets[step]
            modes.append(u[0])
            order = top - step
            chi = chi_jet(-u[1] / u[0], vjet, self.lams[step].value, order)
            chis.append(chi[0])
            vjet = np.array([vjet[m] + 2.0 * chi[m + 1] for m in range(order)])
            potentials.append(vjet[:k + 1])
            jets = jets[:step + 1] + [
                np.array([g[m + 1] + leibniz(chi, g, m) for m in range(g.shape[0] - 1)]) for g in jets[step + 1:]
            ]
        return chis, potentials, modes


def _radii(q: IntertwinerN) -> Tuple[float, float]:
    """Inner radius (beyond R0 and any gap around the origin) and outer extent of the working segments."""
    gaps = [min(abs(lo), abs(hi)) if lo * hi > 0 else 0.0 for lo, hi in q.segments]
    extent = min(min(max(abs(lo), abs(hi)) for lo, hi in q.segments), q.profile.Xmax)
    return max(q.profile.R0, min(gaps)), extent


def _numeric(v: Callable, d1: Callable, d2: Callable, R0: float, eps: float, Xmax: float,
             sides: List[Direction], label: str) -> PotentialProfile:
    profile = PotentialProfile(v=v, d1=d1, d2=d2, R0=R0, eps=eps, C=0.0, Xmax=Xmax, label=label)
    t = np.geomspace(R0, Xmax, 256)
    values = np.concatenate([np.asarray(v(side.sign * t)) for side in sides])
    return replace(profile, C=float(np.max(np.abs(values.imag) / np.maximum(np.abs(values.real), 1e-300))))


@dataclass(frozen=True, eq=False)
class Factorization:
    factors: Tuple[FirstOrderFactor, ...]
    intermediate: Tuple[PotentialProfile, ...]
    validations: Tuple[Optional[KReport], ...]


def factorize_chain(q: IntertwinerN) -> Factorization:
    """q_N- = r_N ... r_1 with r_j = d + chi_j built from the stepwise zero modes.

    Each intermediate potential V^(j) = V^(j-1) + 2 chi_j' is grid-validated
    beyond the radius where its real part reaches eps/2.
    """
    ladder = _Ladder(q)
    x = _segment_points(q.segments, 1024)
    _, _, modes = ladder(x, 0)
    for step, values in enumerate(modes):
        if not np.any(np.abs(values) > 0):
            raise FactorizationError("intermediate zero mode vanishes on the whole working domain", step + 1)
        zeros = find_zeros(x, values)
        if zeros:
            logger.error(f"Intermediate zero mode of step {step + 1} vanishes at {zeros}")
            raise FactorizationError(f"intermediate zero mode vanishes at {', '.join(f'{z:.4g}' for z in zeros)}",
                                     step + 1)

    sides = _side_of(q.segments)
    inner, extent = _radii(q)
    eps = 0.5 * q.profile.eps
    factors, profiles, validations = [], [], []
    for step in range(q.order):
        factors.append(FirstOrderFactor(lam=ladder.lams[step], chi=lambda s, j=step: ladder(s, 0)[0][j],
                                        vjet=lambda s, k, j=step: ladder(s, k)[1][j], label=f"r{step + 1}"))
        if step + 1 == q.order:
            break
        j = step + 1
        v = lambda s, j=j: ladder(s, 0)[1][j][0]
        R0 = outer_radius(v, inner, extent, eps, sides)
        profile = _numeric(v, lambda s, j=j: ladder(s, 1)[1][j][1], lambda s, j=j: ladder(s, 2)[1][j][2],
                           R0, eps, extent, sides, f"intermediate {j} of {q.profile.label}")
        profiles.append(profile)
        validations.append(validate_class(profile, Grid.geometric(R0, extent, settings.GRID_POINTS,
                                                                  grid_side(sides)))
                           if R0 < 0.5 * extent else None)
    logger.info(f"Factorized order-{q.order} intertwiner into {len(factors)} first-order factors")
    return Factorization(factors=tuple(factors), intermediate=tuple(profiles), validations=tuple(validations))


def stepwise_partner(factorization: Factorization, x: np.ndarray) -> np.ndarray:
    """V2 reached through the factors, V^(N) = V^(N-1) + 2 chi_N'."""
    return factorization.factors[-1].partner_jet(x, 0)[0]


def transpose_action(factors: Sequence[FirstOrderFactor]) -> FactorComposition:
    """q_N+ = (r_1-)^t ... (r_N-)^t with (d + chi)^t = -d + chi."""
    return FactorComposition(tuple(factors), transpose=True)


def _value_evaluator(g: Callable, profile: PotentialProfile, lam: complex):
    """(g, g') with g' by a fourth-order central difference on the local wavelength scale."""
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        h = fd_step(profile, lam, x)
        d = [np.asarray(g(x + k * h)) for k in (-2, -1, 1, 2)]
        return np.asarray(g(x)), (d[0] - 8 * d[1] + 8 * d[2] - d[3]) / (12 * h)

    return evaluate


def dual_basis(q: IntertwinerN, h_minus: Optional[PotentialProfile] = None) -> CanonicalBasis:
    """Kernel basis of q_N+: psi_(i,k_i-j-1) = W(basis without phi_(i,j)) / W(basis).

    Chain scaling is fitted so that (h- - lam) psi_(i,j) = psi_(i,j-1).
    """
    h_minus = h_minus or q.partner_profile()
    flat = [(i, j) for i, entry in enumerate(q.basis.entries) for j in range(entry.k)]
    x = np.concatenate([interior_points(lo, hi, 200) for lo, hi in q.segments])
    points = _segment_points(q.segments, settings.GRID_POINTS)
    reach = (max([-lo for lo, _ in q.segments] + [0.0]), max([hi for _, hi in q.segments] + [0.0]))
    entries = []
    for i, entry in enumerate(q.basis.entries):
        lam = entry.lam.value
        raw = []
        for j in range(entry.k):
            omit = flat.index((i, j))

            def value(s, omit=omit):
                jets = q.basis_jets(s, q.order)
                rest = [jet[:q.order] for n, jet in enumerate(jets) if n != omit]
                return wronskian_derivatives(rest)[0] / wronskian_derivatives(jets)[0]

            raw.append(value)
        raw = raw[::-1]
        scales = [1.0]
        for d in range(1, entry.k):
            step = fd_step(h_minus, lam, x)
            lhs = -second_difference(raw[d], x, step) + (np.asarray(h_minus.v(x)) - lam) * raw[d](x)
            c, _ = proportionality(lhs, raw[d - 1](x))
            scales.append(scales[-1] * c)
        members = []
        for d, (g, scale) in enumerate(zip(raw, scales)):
            scaled = lambda s, g=g, scale=scale: g(s) / scale
            evaluate = _value_evaluator(scaled, h_minus, lam)
            original = entry.members[entry.k - d - 1]
            kind = Kind.DECAYING if original.kind is Kind.GROWING else Kind.GROWING
            member = FormalSolution(order=d, lam=entry.lam, direction=original.direction, kind=kind,
                                    traj=sample(evaluate, points, original.traj.tol_achieved), reach=reach,
                                    label=f"psi({i},{d})")
            members.append(classified(member, h_minus))
        entries.append(BasisEntry(lam=entry.lam, members=tuple(members)))
    logger.info(f"Built the dual kernel basis of order {q.order} on {h_minus.label}")
    return CanonicalBasis(entries=tuple(entries), side="plus", profile=h_minus, segments=q.segments)


@dataclass(frozen=True)
class Lemma2Report:
    lam: complex
    killed: List[bool]
    m: int
    residuals: List[float]
    passed: bool


def lemma2_check(q, chain: JordanChain, profile1: PotentialProfile, h_minus: PotentialProfile,
                 span: Tuple[float, float], tol: float = 1e-5) -> Lemma2Report:
    """q kills a leading run of m <= min(M + 1, N) chain members and maps the rest to a chain of h-."""
    lam = chain.lam
    x = interior_points(*span)
    images = [lambda s, n=n: q.apply(member_jet(chain.members, n, profile1, lam, s, q.order), s)
              for n in range(len(chain))]
    killed = [bool(np.max(np.abs(g(x))) <= KILL_TOL * np.max(np.abs(member(x)[0])))
              for g, member in zip(images, chain.members)]
    m = killed.index(False) if False in killed else len(killed)
    structure = all(killed[:m]) and not any(killed[m:]) and m <= min(len(chain), q.order)

    step = fd_step(h_minus, lam, x)
    f = np.asarray(h_minus.v(x)) - lam
    residuals = []
    for n in range(m, len(chain)):
        g = images[n](x)
        prev = images[n - 1](x) if n > m else np.zeros_like(g)
        res = -second_difference(images[n], x, step) + f * g - prev
        residuals.append(float(np.max(np.abs(res)) / max(np.max(np.abs(f * g)), np.max(np.abs(prev)), 1e-300)))
    passed = structure and all(r <= tol for r in residuals)
    if not passed:
        logger.warning(f"Chain at lambda={lam} does not map cleanly: killed {killed}, residuals {residuals}")
    return Lemma2Report(lam=lam, killed=killed, m=m, residuals=residuals, passed=passed)
