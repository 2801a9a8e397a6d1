"""Scenario files: YAML mapping, `--set a.b=value` overrides, pydantic validation."""
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence

import yaml
from pydantic import BaseModel, BeforeValidator, Field, field_validator, model_validator

from config.constants import TASK_IDS
from config.settings import settings
from potential.branch import SpectralValue
from potential.expression import parse_potential
from utils.errors import ParseError, ScenarioError


def _parse_lambda(value: Any) -> complex:
    try:
        return SpectralValue.parse(str(value) if not isinstance(value, (int, float, complex)) else value).value
    except (ParseError, ValueError) as e:
        raise ValueError(f"cannot parse lambda {value!r}: {e}") from e


def _lambda_text(value: Any) -> str:
    _parse_lambda(value)
    return str(value)


LambdaText = Annotated[str, BeforeValidator(_lambda_text)]


class Tolerances(BaseModel):
    ode: float = Field(default_factory=lambda: settings.ODE_TOL, gt=0)
    quad: float = Field(default_factory=lambda: settings.QUAD_TOL, gt=0)
    chain: float = Field(default_factory=lambda: settings.CHAIN_TOL, gt=0)


class DarbouxSection(BaseModel):
    # Closed-form zero mode; without it each (lambda, direction) uses its decaying zero mode
    phi: Optional[str] = None
    lam: Optional[LambdaText] = Field(default=None, alias="lambda")
    reach: float = Field(default=8.0, gt=0)

    @model_validator(mode="after")
    def _paired(self) -> "DarbouxSection":
        if self.phi is not None and self.lam is None:
            raise ValueError("a closed-form darboux.phi needs its darboux.lambda")
        return self


class BasisEntrySpec(BaseModel):
    lam: LambdaText = Field(alias="lambda")
    k: int = Field(default=1, ge=1)
    # "decaying" builds the decaying chain at +inf and continues it through the origin
    phi: str = "decaying"
    reach: float = Field(default=8.0, gt=0)


class IntertwineSection(BaseModel):
    basis: List[BasisEntrySpec] = Field(default_factory=list)
    cannot_be_stripped: bool = False


class Multiplicity(BaseModel):
    lam: LambdaText = Field(alias="lambda")
    nu_plus: int = Field(ge=0)
    nu_minus: int = Field(ge=0)


class Scenario(BaseModel):
    potential: str
    R0: float = Field(gt=0)
    eps: float = Field(gt=0)
    Xmax: Optional[float] = None
    lambdas: List[complex] = Field(default_factory=list)
    directions: List[Literal["up", "down"]] = Field(default_factory=lambda: ["up", "down"])
    tasks: List[str]
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output_dir: Path = Field(default_factory=lambda: Path(settings.OUTPUT_DIR))
    n_max: int = Field(default=2, ge=0)
    seed_x: Optional[float] = None
    jobs: int = Field(default_factory=lambda: settings.JOBS, ge=1)
    darboux: DarbouxSection = Field(default_factory=DarbouxSection)
    intertwine: IntertwineSection = Field(default_factory=IntertwineSection)
    index: List[Multiplicity] = Field(default_factory=list)

    @field_validator("potential")
    @classmethod
    def _potential(cls, value: str) -> str:
        try:
            parse_potential(value)
        except ParseError as e:
            raise ValueError(f"cannot parse potential {value!r}: {e}") from e
        return value

    @field_validator("lambdas", mode="before")
    @classmethod
    def _lambdas(cls, value: Any) -> List[complex]:
        if not isinstance(value, (list, tuple)):
            value = [value]
        return [_parse_lambda(v) for v in value]

    @field_validator("tasks")
    @classmethod
    def _tasks(cls, value: List[str]) -> List[str]:
        unknown = [t for t in value if t not in TASK_IDS]
        if unknown:
            raise ValueError(f"unknown task id(s) {unknown}; recognised: {TASK_IDS}")
        return value

    @model_validator(mode="after")
    def _xmax(self) -> "Scenario":
        if self.Xmax is not None and self.Xmax <= self.R0:
            raise ValueError(f"Xmax={self.Xmax} must exceed R0={self.R0}")
        return self

    def ordered_tasks(self) -> List[str]:
        """Requested tasks in dependency order."""
        return [t for t in TASK_IDS if t in self.tasks]


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """`a.b=value` sets raw["a"]["b"]; values are read as YAML scalars."""
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ScenarioError(f"override {item!r} is not of the form key=value")
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ScenarioError(f"override {item!r} descends into a non-mapping at {part!r}")
        node[parts[-1]] = yaml.safe_load(text) if text else None
    return raw


def load_scenario(path: Path, overrides: Sequence[str] = ()) -> Scenario:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ScenarioError(f"scenario {path} must hold a mapping at the top level")
    return Scenario.model_validate(apply_overrides(raw, overrides))
