"""Experiment documents: model, initial roots, time span, engine and tolerance overrides."""
import json
from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, model_validator

from src.config import SolverSettings
from src.data import get_example
from src.errors import ConfigError
from src.models import GeneratingModel, model_from_dict
from src.state import IVP, RootState
from src.utils import parse_complex

ComplexValue = Annotated[Any, BeforeValidator(parse_complex)]


class ExperimentConfig(BaseModel):
    """One IVP plus run options; complex numbers are [re, im] pairs."""

    model_config = ConfigDict(extra="forbid")

    label: str = "experiment"
    model: dict[str, Any]
    m1: int = Field(ge=1)
    x0: list[ComplexValue]
    xdot0: list[ComplexValue] | None = None
    t0: float = 0.0
    t_end: float
    sample_dt: float = Field(1e-3, gt=0)
    engine: Literal["algebraic", "direct", "both"] = "algebraic"
    tolerances: dict[str, float | int | bool] = Field(default_factory=dict)
    output: str | None = None
    format: Literal["csv", "json"] = "csv"

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        model = self.generating_model()
        if len(self.x0) != model.dimension:
            raise ValueError(f"x0 has {len(self.x0)} roots, model dimension is {model.dimension}")
        if model.order == 2 and self.xdot0 is None:
            raise ValueError("second-order models need xdot0")
        if self.xdot0 is not None and len(self.xdot0) != len(self.x0):
            raise ValueError("xdot0 and x0 differ in length")
        if self.t_end == self.t0:
            raise ValueError("t_end must differ from t0")
        unknown = set(self.tolerances) - set(SolverSettings.model_fields)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {', '.join(sorted(unknown))}")
        return self

    def generating_model(self) -> GeneratingModel:
        return model_from_dict(self.model)

    def root_state(self) -> RootState:
        return RootState(self.x0, self.m1, self.xdot0 if self.generating_model().order == 2 else None)

    def to_ivp(self) -> IVP:
        return IVP(self.generating_model(), self.root_state(), self.t0, self.t_end, self.sample_dt)

    def settings(self, base: SolverSettings) -> SolverSettings:
        return base.with_overrides(**self.tolerances)

    def with_span(self, t_end: float | None = None, sample_dt: float | None = None) -> "ExperimentConfig":
        updates = {k: v for k, v in (("t_end", t_end), ("sample_dt", sample_dt)) if v is not None}
        return parse_experiment({**self.to_document(), **updates}) if updates else self

    def to_document(self) -> dict[str, Any]:
        """JSON-ready document; parse_experiment(to_document()) rebuilds the config."""
        doc = self.model_dump()
        doc["x0"] = [[z.real, z.imag] for z in self.x0]
        if self.xdot0 is not None:
            doc["xdot0"] = [[z.real, z.imag] for z in self.xdot0]
        return doc


def parse_experiment(doc: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig(**doc)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}") from e


def load_experiment(path: Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    doc.setdefault("label", path.stem)
    return parse_experiment(doc)


def experiment_from_example(example_id: str) -> ExperimentConfig:
    entry = get_example(example_id)
    return parse_experiment(
        {
            "label": example_id,
            "model": entry["model"],
            "m1": entry["m1"],
            "x0": entry["x0"],
            "xdot0": entry.get("xdot0"),
            "t_end": entry.get("t_end", 1.0),
        }
    )

