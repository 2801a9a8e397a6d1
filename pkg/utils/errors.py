"""Exception hierarchy for every diagnostic the library can raise."""
from typing import List, Optional, Sequence


class SusyQMError(Exception):
    """Base class for all library errors."""


class ParseError(SusyQMError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier '{name}'", offset)
        self.name = name


class EvaluationError(SusyQMError):
    """Potential evaluation produced a non-finite value."""

    def __init__(self, message: str, x: Optional[float] = None):
        super().__init__(message)
        self.x = x


class BranchError(SusyQMError):
    """Argument lies on the principal-branch cut."""


class AdmissibilityError(SusyQMError):
    """Spectral value is neither real non-positive nor off the real axis."""


class BranchContextError(SusyQMError):
    """R2 condition never holds within the working radius."""


class GridTooCoarseError(SusyQMError):
    pass


class DivergenceError(SusyQMError):
    def __init__(self, message: str, exponent: Optional[float] = None):
        super().__init__(message)
        self.exponent = exponent


class IntegrationError(SusyQMError):
    def __init__(self, message: str, last_x: float):
        super().__init__(f"{message} (last x reached: {last_x:.6g})")
        self.last_x = last_x


class SeedError(SusyQMError):
    pass


class SeriesStartError(SusyQMError):
    pass


class VariantError(SusyQMError):
    pass


class ZeroInDomainError(SusyQMError):
    def __init__(self, message: str, zeros: Sequence[float]):
        super().__init__(f"{message}: {', '.join(f'{z:.6g}' for z in zeros)}")
        self.zeros = list(zeros)


class WronskianZeroError(ZeroInDomainError):
    pass


class FactorizationError(SusyQMError):
    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class ResidualError(SusyQMError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message}: residual {residual:.3e}")
        self.residual = residual


class ChainError(SusyQMError):
    def __init__(self, message: str, order: int):
        super().__init__(f"{message} (order {order})")
        self.order = order


class InconclusiveVerdictError(SusyQMError):
    def __init__(self, message: str, members: List[str]):
        super().__init__(f"{message}: {', '.join(members)}")
        self.members = members


class StructureError(SusyQMError):
    pass


class ScenarioError(SusyQMError):
    pass


class NotNormalizableError(SusyQMError):
    """An operation that needs normalizable inputs received one that is not."""
