"""Configuration: paths and numerical settings from env. All paths resolved from repo root."""
import os
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.errors import ConfigError

# Project root (directory containing pyproject.toml)
PROJECT_ROOT = Path(__file__).resolve().parent.parent

ENV_PREFIX = "MULTIROOT_"


def get_resources_dir() -> Path:
    return Path(os.environ.get("RESOURCES_DIR", PROJECT_ROOT / "project_resources"))


def get_examples_path() -> Path:
    return get_resources_dir() / "examples.json"


def get_configs_dir() -> Path:
    return get_resources_dir() / "configs"


def get_output_dir() -> Path:
    raw = os.environ.get("OUTPUT_DIR", "runs")
    p = Path(raw)
    if not p.is_absolute():
        p = PROJECT_ROOT / p
    return p


class SolverSettings(BaseModel):
    """Tolerances and limits shared by the engines."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol_root: float = Field(1e-9, gt=0)
    tol_period: float = Field(1e-4, gt=0)
    eps_coll_factor: float = Field(1e-8, gt=0)
    tol_consistency: float = Field(1e-8, gt=0)
    max_refinements: int = Field(24, ge=0)
    max_newton: int = Field(50, ge=1)
    max_halvings: int = Field(12, ge=0)
    log_products_threshold: int = Field(30, ge=1)
    check_consistency: bool = True

    def eps_coll(self, scale_x: float) -> float:
        """Collision threshold for roots of magnitude up to scale_x."""
        return self.eps_coll_factor * (1.0 + scale_x)

    def with_overrides(self, **overrides) -> "SolverSettings":
        values = {k: v for k, v in overrides.items() if v is not None}
        if not values:
            return self
        try:
            return SolverSettings(**{**self.model_dump(), **values})
        except ValidationError as e:
            raise ConfigError(f"invalid solver settings: {e}") from e


def get_settings() -> SolverSettings:
    """Defaults overridden by MULTIROOT_<FIELD> environment variables."""
    raw = {}
    for name in SolverSettings.model_fields:
        value = os.environ.get(ENV_PREFIX + name.upper())
        if value is not None:
            raw[name] = value
    try:
        return SolverSettings(**raw)
    except ValidationError as e:
        raise ConfigError(f"invalid {ENV_PREFIX}* environment settings: {e}") from e
