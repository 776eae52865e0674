"""Shared records: root/coefficient states, initial value problems, trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, TypedDict

import numpy as np

from src.config import SolverSettings
from src.errors import ConfigError

if TYPE_CHECKING:
    from src.models import GeneratingModel

# Engines: algebraic -> closed-form coefficient flow + root extraction; direct -> RK4 on the x-system
ENGINE_ALGEBRAIC = "algebraic"
ENGINE_DIRECT = "direct"
ENGINE_BOTH = "both"
ENGINES = (ENGINE_ALGEBRAIC, ENGINE_DIRECT, ENGINE_BOTH)

# Branch event kinds
EVENT_NEAR_COLLISION = "near_collision"
EVENT_AMBIGUOUS_MATCH = "ambiguous_match"


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=complex).ravel()
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RootState:
    """Roots x_1..x_N (x_1 has multiplicity m1+1) and optional velocities."""

    x: np.ndarray
    m1: int
    xdot: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen_array(self.x, "x"))
        if self.xdot is not None:
            xdot = _frozen_array(self.xdot, "xdot")
            if xdot.size != self.x.size:
                raise ConfigError(f"xdot has {xdot.size} entries, x has {self.x.size}")
            object.__setattr__(self, "xdot", xdot)
        if self.m1 < 1:
            raise ConfigError("m1 must be ≥ 1")
        if self.x.size < 2:
            raise ConfigError("N must be ≥ 2")

    @property
    def n_roots(self) -> int:
        return self.x.size

    def min_gap(self) -> tuple[float, tuple[int, int]]:
        """Smallest pairwise distance and the pair attaining it."""
        d = np.abs(self.x[:, None] - self.x[None, :])
        np.fill_diagonal(d, np.inf)
        i, j = np.unravel_index(np.argmin(d), d.shape)
        return float(d[i, j]), (int(min(i, j)), int(max(i, j)))


@dataclass(frozen=True)
class CoeffState:
    """First N coefficients y_1..y_N, optional derivatives, at time t."""

    y: np.ndarray
    t: float = 0.0
    ydot: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen_array(self.y, "y"))
        if self.ydot is not None:
            object.__setattr__(self, "ydot", _frozen_array(self.ydot, "ydot"))


@dataclass(frozen=True)
class IVP:
    model: GeneratingModel
    x0: RootState
    t0: float
    t_end: float
    sample_dt: float

    def __post_init__(self):
        if self.sample_dt <= 0:
            raise ConfigError("sample_dt must be > 0")
        if self.t_end == self.t0:
            raise ConfigError("t_end must differ from t0")
        if self.model.dimension != self.x0.n_roots:
            raise ConfigError(f"model dimension {self.model.dimension} != N={self.x0.n_roots}")
        if self.model.order == 2 and self.x0.xdot is None:
            raise ConfigError("second-order models need initial velocities")
        self.check_separation()

    def check_separation(self, settings: SolverSettings | None = None) -> None:
        """ConfigError when two initial roots coincide, or lie within eps_coll of `settings`."""
        gap, pair = self.x0.min_gap()
        eps = settings.eps_coll(float(np.max(np.abs(self.x0.x)))) if settings is not None else 0.0
        if gap <= eps:
            raise ConfigError(f"initial roots x{pair[0] + 1} and x{pair[1] + 1} coincide (gap {gap:.3g})")

    @property
    def direction(self) -> int:
        return 1 if self.t_end > self.t0 else -1

    def grid(self) -> np.ndarray:
        """Sample times t0 + k*dt (signed), ending exactly at t_end."""
        span = abs(self.t_end - self.t0)
        steps = int(np.floor(span / self.sample_dt + 1e-9))
        times = self.t0 + self.direction * self.sample_dt * np.arange(steps + 1)
        if abs(times[-1] - self.t_end) > 1e-9 * max(1.0, span):
            times = np.append(times, self.t_end)
        return times


@dataclass(frozen=True)
class BranchEvent:
    t: float
    pair: tuple[int, int]
    kind: str
    gap: float


class TrajectoryMeta(TypedDict, total=False):
    engine: str
    m1: int
    order: int
    tolerances: dict
    refinements: int
    halvings: int
    max_constraint_residual: float  # |multiple-root equation| / sum of its term magnitudes at x1, max over samples
    max_redundant_residual: float  # redundant coefficient rows / scale, max over samples
    max_multiplicity_residual: float  # deflation remainders at x1 / scale, max over samples
    numeric_coefficient_flow: bool
    elapsed_s: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    m1: int
    xdot: np.ndarray | None = None
    branch_events: tuple[BranchEvent, ...] = ()
    meta: TrajectoryMeta = field(default_factory=dict)

    def __post_init__(self):
        if self.times.ndim != 1 or self.x.shape[0] != self.times.size:
            raise ValueError("times and x disagree in length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def n_roots(self) -> int:
        return self.x.shape[1]

    def state(self, i: int) -> RootState:
        xdot = None if self.xdot is None else self.xdot[i]
        if xdot is not None and not np.all(np.isfinite(xdot)):
            xdot = None
        return RootState(self.x[i], self.m1, xdot)

    @property
    def states(self) -> Iterator[RootState]:
        return (self.state(i) for i in range(len(self)))
