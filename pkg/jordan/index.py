"""Balance of algebraic multiplicities against kernel normalizability counts at one spectral value."""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from jordan.basis import BasisEntry, CanonicalBasis
from utils.errors import InconclusiveVerdictError, StructureError
from utils.formatting import write_csv
from utils.logging import logger


@dataclass(frozen=True)
class IndexReport:
    lam: complex
    nu_plus: int
    nu_minus: int
    n_plus: int
    n_minus: int
    n_zero: int
    n_zero_dual: int
    balance_holds: bool
    degenerate_zero: bool

    @property
    def integers(self) -> Tuple[int, int, int, int, int, int]:
        return self.nu_plus, self.nu_minus, self.n_plus, self.n_minus, self.n_zero, self.n_zero_dual

    @property
    def passed(self) -> bool:
        return self.balance_holds and self.degenerate_zero

    def manifest(self) -> dict:
        return {
            "lambda": self.lam,
            "nu_plus": self.nu_plus,
            "nu_minus": self.nu_minus,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "n_zero": self.n_zero,
            "n_zero_dual": self.n_zero_dual,
            "balance_holds": self.balance_holds,
            "degenerate_zero": self.degenerate_zero,
        }

    def to_csv(self, path: Path) -> Path:
        names = ("nu_plus", "nu_minus", "n_plus", "n_minus", "n_zero", "n_zero_dual")
        return write_csv({name: [value] for name, value in zip(names, self.integers)}, path)


def _counts(entry: Optional[BasisEntry]) -> Tuple[int, int]:
    """(normalizable at both infinities, normalizable at exactly one) among the entry's members."""
    if entry is None:
        return 0, 0
    undecided = [m.label or f"order {m.order}" for m in entry.members if not m.norm.decided]
    if undecided:
        raise InconclusiveVerdictError(f"cannot count normalizable members at lambda={entry.lam}", undecided)
    both = sum(1 for m in entry.members if m.norm.both)
    one = sum(1 for m in entry.members if m.norm.one_sided)
    return both, one


def index_report(lam: complex, basis_minus: CanonicalBasis, basis_plus: CanonicalBasis,
                 nu_plus: int, nu_minus: int) -> IndexReport:
    """nu+ - n+ = nu- - n-, and both differences vanish when a one-sided member exists.

    n+ and n0 count the kernel basis of q_N- (functions of h+), n- and the
    dual n0 the kernel basis of q_N+ (functions of h-).
    """
    if basis_minus.side != "minus" or basis_plus.side != "plus":
        raise ValueError("index_report takes the minus basis first and the plus basis second")
    lam = complex(lam)
    n_plus, n_zero = _counts(basis_minus.entry_for(lam))
    n_minus, n_zero_dual = _counts(basis_plus.entry_for(lam))
    if n_zero != n_zero_dual:
        raise StructureError(f"one-sided counts differ between the kernels at lambda={lam}: {n_zero} and {n_zero_dual}")
    balance = nu_plus - n_plus == nu_minus - n_minus
    degenerate = n_zero == 0 or (nu_plus - n_plus == 0 and nu_minus - n_minus == 0)
    if not (balance and degenerate):
        logger.warning(f"Index balance fails at lambda={lam}: nu+={nu_plus}, n+={n_plus}, nu-={nu_minus}, "
                       f"n-={n_minus}, n0={n_zero}")
    else:
        logger.info(f"Index balance holds at lambda={lam} (nu+={nu_plus}, nu-={nu_minus}, n0={n_zero})")
    return IndexReport(lam=lam, nu_plus=nu_plus, nu_minus=nu_minus, n_plus=n_plus, n_minus=n_minus,
                       n_zero=n_zero, n_zero_dual=n_zero_dual, balance_holds=balance, degenerate_zero=degenerate)
