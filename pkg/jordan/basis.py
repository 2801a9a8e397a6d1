"""Canonical kernel bases, their normalizability staircases and the duality between transposed kernels."""
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

from config.settings import settings
from potential.branch import SpectralValue
from potential.profile import PotentialProfile
from solutions.chains import link_residual
from solutions.formal import FormalSolution, Verdict, trusted_span
from utils.errors import InconclusiveVerdictError, StructureError
from utils.logging import logger

Segment = Tuple[float, float]


@dataclass(frozen=True)
class BasisEntry:
    """One Jordan chain phi_(i,0..k-1) at eigenvalue lam."""

    lam: SpectralValue
    members: Tuple[FormalSolution, ...]

    @property
    def k(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class CanonicalBasis:
    """Kernel basis of q_N- (side "minus", functions of h+) or of q_N+ (side "plus", functions of h-)."""

    entries: Tuple[BasisEntry, ...]
    side: str
    profile: PotentialProfile
    segments: Tuple[Segment, ...] = ()

    def __post_init__(self):
        if self.side not in ("minus", "plus"):
            raise ValueError(f"basis side must be 'minus' or 'plus', got {self.side!r}")
        if not self.segments and self.entries:
            spans = [trusted_span(m) for m in self.members()]
            object.__setattr__(self, "segments", ((max(s[0] for s in spans), min(s[1] for s in spans)),))

    @property
    def N(self) -> int:
        return sum(e.k for e in self.entries)

    def members(self) -> Iterator[FormalSolution]:
        for entry in self.entries:
            yield from entry.members

    def indexed(self) -> Iterator[Tuple[int, int, BasisEntry, FormalSolution]]:
        for i, entry in enumerate(self.entries):
            for j, member in enumerate(entry.members):
                yield i, j, entry, member

    def entry_for(self, lam: complex, tol: float = 1e-12) -> Optional[BasisEntry]:
        for entry in self.entries:
            if abs(entry.lam.value - lam) <= tol * max(1.0, abs(lam)):
                return entry
        return None

    def chain_residuals(self) -> List[float]:
        """Link residuals of every member on the basis segments, chain by chain."""
        out = []
        for _, j, entry, member in self.indexed():
            prev = entry.members[j - 1] if j else None
            out.extend(link_residual(prev, member, self.profile, segment) for segment in self.segments)
        return out

    def check_chains(self, tol: float = None) -> bool:
        tol = tol or settings.CHAIN_TOL
        worst = max(self.chain_residuals(), default=0.0)
        if worst > tol:
            logger.warning(f"{self.side} basis on {self.profile.label}: chain residual {worst:.3e} above {tol:g}")
        return worst <= tol


@dataclass(frozen=True)
class NormRow:
    lam: complex
    k: int
    k_plus_up: int
    k_plus_down: int
    plus: List[str] = field(default_factory=list)
    minus: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class NormTable:
    side: str
    rows: List[NormRow] = field(default_factory=list)


def _staircase(verdicts: Sequence[Verdict], where: str) -> int:
    k_plus = 0
    while k_plus < len(verdicts) and verdicts[k_plus] is Verdict.YES:
        k_plus += 1
    if any(v is Verdict.YES for v in verdicts[k_plus:]):
        raise StructureError(f"basis not canonical or classifier failure: verdicts {[v.value for v in verdicts]} "
                             f"at {where} are not a staircase")
    return k_plus


def norm_table(basis: CanonicalBasis) -> NormTable:
    """Per entry, the number of leading members normalizable at +inf and at -inf."""
    undecided = [m.label or f"({i},{j})" for i, j, _, m in basis.indexed() if not m.norm.decided]
    if undecided:
        raise InconclusiveVerdictError("cannot build the normalizability table, undecided members", undecided)
    rows = []
    for entry in basis.entries:
        plus = [m.norm.plus for m in entry.members]
        minus = [m.norm.minus for m in entry.members]
        rows.append(NormRow(lam=entry.lam.value, k=entry.k,
                            k_plus_up=_staircase(plus, f"+inf, lambda={entry.lam}"),
                            k_plus_down=_staircase(minus, f"-inf, lambda={entry.lam}"),
                            plus=[v.value for v in plus], minus=[v.value for v in minus]))
    return NormTable(side=basis.side, rows=rows)


@dataclass(frozen=True)
class DualPair:
    i: int
    j: int
    dual_j: int
    xor_up: bool
    xor_down: bool


@dataclass(frozen=True)
class DualityReport:
    pairs: List[DualPair]
    complementary: List[bool]
    passed: bool


def duality_check(table_minus: NormTable, table_plus: NormTable) -> DualityReport:
    """phi_(i,j) normalizable at an infinity exactly when psi_(i,k_i-j-1) is not."""
    if len(table_minus.rows) != len(table_plus.rows):
        raise StructureError(f"tables hold {len(table_minus.rows)} and {len(table_plus.rows)} eigenvalues")
    pairs, complementary = [], []
    for i, (a, b) in enumerate(zip(table_minus.rows, table_plus.rows)):
        if a.k != b.k or abs(a.lam - b.lam) > 1e-12 * max(1.0, abs(a.lam)):
            raise StructureError(f"entry {i}: (lambda, k) = ({a.lam}, {a.k}) against ({b.lam}, {b.k})")
        for j in range(a.k):
            d = a.k - j - 1
            pairs.append(DualPair(i=i, j=j, dual_j=d,
                                  xor_up=(a.plus[j] == "yes") != (b.plus[d] == "yes"),
                                  xor_down=(a.minus[j] == "yes") != (b.minus[d] == "yes")))
        complementary.append(a.k_plus_up + b.k_plus_up == a.k and a.k_plus_down + b.k_plus_down == a.k)
    passed = all(p.xor_up and p.xor_down for p in pairs) and all(complementary)
    if not passed:
        logger.warning("Kernel duality fails for " +
                       ", ".join(f"({p.i},{p.j})" for p in pairs if not (p.xor_up and p.xor_down)))
    return DualityReport(pairs=pairs, complementary=complementary, passed=passed)
