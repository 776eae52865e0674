"""Period detection on sampled root trajectories."""
import math
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from src.config import SolverSettings, get_settings
from src.errors import ConfigError, InsufficientSpanError
from src.log_config import log_period_verdict
from src.models import model_period
from src.solver import integrate_direct, solve_algebraic
from src.state import ENGINE_ALGEBRAIC, ENGINE_DIRECT, Trajectory

PERIODIC = "periodic"
ASYMPTOTIC = "asymptotic"
APERIODIC = "aperiodic"

# Multiples of the candidate tried, in ascending order
MULTIPLES = (Fraction(1), Fraction(2), Fraction(3), Fraction(4))


class PeriodVerdict(NamedTuple):
    kind: str
    period: float | None = None
    multiple: Fraction | None = None
    defect: float = float("nan")  # max relative recurrence defect at the reported lag (final window if asymptotic)

    def __str__(self) -> str:
        if self.kind == APERIODIC:
            return APERIODIC
        return f"{self.kind}({self.period:g})"


def recurrence_defect(x: np.ndarray, lag: int) -> np.ndarray:
    """d_i = max_n |x_n(t_i + lag) - x_n(t_i)| / (1 + max|x|)."""
    ref = 1.0 + float(np.max(np.abs(x)))
    return np.max(np.abs(x[lag:] - x[:-lag]), axis=1) / ref


def _decays(defect: np.ndarray, lag: int, tol: float) -> tuple[bool, float]:
    """Window maxima (one lag per window) nonincreasing down to a final window below tol."""
    n_windows = defect.size // lag
    if n_windows < 2:
        return False, float("nan")
    maxima = defect[: n_windows * lag].reshape(n_windows, lag).max(axis=1)
    for before, after in zip(maxima[:-1], maxima[1:]):
        if after > before * (1 + 1e-9) and after >= tol:
            return False, float(maxima[-1])
    return bool(maxima[-1] < tol), float(maxima[-1])


def estimate_period(
    traj: Trajectory,
    candidate: float,
    tol: float | None = None,
    coordinates: Sequence[int] | None = None,
    settings: SolverSettings | None = None,
) -> PeriodVerdict:
    """Least multiple of `candidate` (x1 ... x4) under which the trajectory recurs.

    coordinates restricts the test to the given 0-based root indices.
    """
    if candidate <= 0:
        raise ConfigError("candidate period must be > 0")
    tol = tol if tol is not None else (settings or get_settings()).tol_period
    times = traj.times
    if times.size < 3:
        raise InsufficientSpanError("trajectory has fewer than 3 samples")
    span = float(times[-1] - times[0])
    if span < 2 * candidate:
        raise InsufficientSpanError(f"span {span:g} is shorter than twice the candidate {candidate:g}")
    steps = np.diff(times)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-6, atol=0):
        raise ConfigError("period estimation needs a uniformly sampled trajectory")

    x = traj.x if coordinates is None else traj.x[:, list(coordinates)]
    asymptotic: PeriodVerdict | None = None
    for mult in MULTIPLES:
        T = candidate * float(mult)
        lag_f = T / dt
        lag = int(round(lag_f))
        if lag < 1 or abs(lag_f - lag) > 1e-6 * lag_f:
            continue
        # keep at least one candidate period of overlap
        if times.size - lag < min(lag, int(round(candidate / dt))):
            continue
        d = recurrence_defect(x, lag)
        worst = float(d.max())
        if worst < tol:
            return PeriodVerdict(PERIODIC, T, mult, worst)
        if asymptotic is None:
            ok, final = _decays(d, lag, tol)
            if ok:
                asymptotic = PeriodVerdict(ASYMPTOTIC, T, mult, final)
    return asymptotic or PeriodVerdict(APERIODIC)


class PeriodStudy(NamedTuple):
    label: str
    candidate: float
    overall: PeriodVerdict
    per_coordinate: tuple[PeriodVerdict, ...]
    span: float


def default_span(config, candidate: float, tol: float, span_factor: float = 5) -> float:
    """span_factor candidates, plus the time for a decaying transient to fall below tol*1e-2."""
    span = span_factor * candidate
    nominal = model_period(config.generating_model())
    decay = config.generating_model().decay_rate
    if nominal is not None and nominal.asymptotic and decay:
        span += math.log(1.0 / (tol * 1e-2)) / decay
    return span


def period_study(
    config,
    settings: SolverSettings,
    candidate: float | None = None,
    t_end: float | None = None,
    dt: float = 1e-2,
    engine: str = ENGINE_ALGEBRAIC,
) -> PeriodStudy:
    """Solve an experiment long enough to test `candidate` and report overall and per-root verdicts."""
    if candidate is None:
        nominal = model_period(config.generating_model())
        if nominal is None:
            raise ConfigError("model has no generating period; pass a candidate")
        candidate = nominal.period
    if t_end is None:
        # whole number of samples keeps the grid uniform
        span = default_span(config, candidate, settings.tol_period)
        t_end = config.t0 + math.ceil(span / dt - 1e-9) * dt
    config = config.with_span(t_end, dt)
    ivp = config.to_ivp()
    traj = integrate_direct(ivp, settings) if engine == ENGINE_DIRECT else solve_algebraic(ivp, settings)

    overall = estimate_period(traj, candidate, settings=settings)
    log_period_verdict(config.label, overall)
    per_coord = []
    for n in range(traj.n_roots):
        verdict = estimate_period(traj, candidate, coordinates=[n], settings=settings)
        log_period_verdict(f"{config.label} x{n + 1}", verdict)
        per_coord.append(verdict)
    return PeriodStudy(config.label, candidate, overall, tuple(per_coord), float(t_end - config.t0))
