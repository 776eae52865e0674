"""Solution engines.

solve_algebraic: closed-form coefficient flow, Newton-tracked multiple root, polynomial
deflation and assignment of the simple roots to the previous sample.
integrate_direct: classical RK4 on the nonlinear root system itself, as an independent oracle.
"""
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from src.coeffs import CoefficientTables, build_tables
from src.config import SolverSettings, get_settings
from src.dynamics import FirstOrderRHS, SecondOrderRHS, first_order_field
from src.errors import CollisionError, ConsistencyError, NoClosedFormError, StepUnderflowError
from src.log_config import (
    log_branch_event,
    log_refinement,
    log_solve_end,
    log_solve_start,
    log_step_halving,
)
from src.models import GeneratingModel, model_flow, model_rhs
from src.state import (
    ENGINE_ALGEBRAIC,
    ENGINE_DIRECT,
    EVENT_AMBIGUOUS_MATCH,
    EVENT_NEAR_COLLISION,
    IVP,
    BranchEvent,
    Trajectory,
)
from src.tracking import deflate, min_gap, roots_of, track_assignment, track_multiple_root
from src.vieta import (
    assemble_polynomial,
    coeff_derivs_from_roots,
    coeffs_from_roots,
    extend_y,
    multiple_root_relative_residual,
    redundant_rows_residual,
    scale,
)

# Max substep for numerically integrated coefficient flows
COEFF_FLOW_STEP = 1e-3


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, z: np.ndarray, h: float,
             k1: np.ndarray | None = None) -> np.ndarray:
    """One classical RK4 step; `k1` = f(t, z) when already known."""
    k1 = f(t, z) if k1 is None else k1
    k2 = f(t + h / 2, z + h / 2 * k1)
    k3 = f(t + h / 2, z + h / 2 * k2)
    k4 = f(t + h, z + h * k3)
    return z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


class CoefficientFlow:
    """(y(t), ydot(t)) for a model; exact when a closed form exists, RK4 otherwise."""

    def __init__(self, model: GeneratingModel, t0: float, y0: np.ndarray, ydot0: np.ndarray | None):
        self.model = model
        self.t0 = t0
        self.y0 = y0
        self.ydot0 = ydot0
        self._numeric = False
        try:
            model_flow(model, t0, t0, y0, ydot0)
        except NoClosedFormError:
            self._numeric = True
            self._t = t0
            self._z = y0.copy() if model.order == 1 else np.concatenate([y0, ydot0])

    @property
    def numeric(self) -> bool:
        return self._numeric

    def _field(self, t: float, z: np.ndarray) -> np.ndarray:
        N = self.model.dimension
        if self.model.order == 1:
            return model_rhs(self.model, t, z)
        return np.concatenate([z[N:], model_rhs(self.model, t, z[:N], z[N:])])

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if not self._numeric:
            y, ydot = model_flow(self.model, self.t0, t, self.y0, self.ydot0)
            if self.model.order == 1:
                ydot = model_rhs(self.model, t, y)
            return y, ydot
        span = t - self._t
        if span != 0:
            steps = max(1, int(np.ceil(abs(span) / COEFF_FLOW_STEP)))
            h = span / steps
            for i in range(steps):
                self._z = rk4_step(self._field, self._t + i * h, self._z, h)
            self._t = t
        N = self.model.dimension
        if self.model.order == 1:
            return self._z.copy(), model_rhs(self.model, t, self._z)
        return self._z[:N].copy(), self._z[N:].copy()


@dataclass
class _Sample:
    t: float
    x: np.ndarray
    xdot: np.ndarray
    constraint: float = 0.0
    redundant: float = 0.0
    multiplicity: float = 0.0


class _AlgebraicTracker:
    def __init__(self, ivp: IVP, settings: SolverSettings):
        self.ivp = ivp
        self.settings = settings
        self.m1 = ivp.x0.m1
        self.N = ivp.x0.n_roots
        self.tables: CoefficientTables = build_tables(self.N, self.m1)
        y0 = coeffs_from_roots(ivp.x0)[: self.N]
        ydot0 = coeff_derivs_from_roots(ivp.x0) if ivp.model.order == 2 else None
        self.flow = CoefficientFlow(ivp.model, ivp.t0, y0, ydot0)
        self.refinements = 0
        self.events: list[BranchEvent] = []

    def initial(self) -> _Sample:
        x = np.array(self.ivp.x0.x, dtype=complex)
        y, ydot = self.flow(self.ivp.t0)
        return _Sample(self.ivp.t0, x, self._velocities(x, y, ydot))

    def _velocities(self, x: np.ndarray, y: np.ndarray, ydot: np.ndarray) -> np.ndarray:
        try:
            return first_order_field(x, y, ydot, self.tables, self.settings)
        except CollisionError:
            return np.full(self.N, np.nan + 0j)

    def sample(self, t: float, prev: _Sample) -> tuple[_Sample, bool]:
        s = self.settings
        y, ydot = self.flow(t)
        x1 = track_multiple_root(y, prev.x[0], self.tables, s)
        ref = scale(prev.x, self.m1)
        constraint = multiple_root_relative_residual(y, x1, self.tables)

        y_full = np.concatenate([y, extend_y(y, x1, self.tables)])
        redundant = 0.0
        if s.check_consistency:
            redundant = float(np.max(np.abs(redundant_rows_residual(y_full, x1, self.tables)))) / ref
            if redundant > s.tol_consistency:
                raise ConsistencyError(f"redundant coefficient rows off by {redundant:.3g} (relative)", t)

        quotient, remainders = deflate(assemble_polynomial(y_full), x1, self.m1 + 1)
        others = roots_of(quotient)
        eps = s.eps_coll(float(np.max(np.abs(prev.x))))
        match = track_assignment(prev.x[1:], others, eps)
        x = np.concatenate([[x1], others[match.permutation]])
        gaps = np.abs(x[1:] - x1)
        if np.min(gaps) < eps:
            n = int(np.argmin(gaps))
            raise CollisionError(f"multiple root x1 meets a simple root ({gaps[n]:.3g} apart)", (0, n + 1), t)

        sample = _Sample(
            t, x, self._velocities(x, y, ydot),
            constraint=constraint, redundant=redundant,
            multiplicity=float(np.max(np.abs(remainders))) / ref,
        )
        return sample, match.ambiguous

    def _refine_reason(self, prev: _Sample, cur: _Sample, ambiguous: bool) -> str | None:
        if ambiguous:
            return EVENT_AMBIGUOUS_MATCH
        gap = min(min_gap(prev.x), min_gap(cur.x))
        if np.max(np.abs(cur.x - prev.x)) > 0.25 * gap:
            return EVENT_NEAR_COLLISION
        return None

    def advance(self, prev: _Sample, t: float, depth: int = 0) -> _Sample:
        """Sample at t, bisecting [prev.t, t] while the step is too coarse to track continuously."""
        cur, ambiguous = self.sample(t, prev)
        reason = self._refine_reason(prev, cur, ambiguous)
        if reason is None:
            return cur
        if depth >= self.settings.max_refinements:
            _, pair = _closest_pair(cur.x)
            event = BranchEvent(t=float(t), pair=pair, kind=reason, gap=min_gap(cur.x))
            self.events.append(event)
            log_branch_event(event.t, event.pair, event.kind)
            return cur
        self.refinements += 1
        log_refinement(t, depth + 1, reason)
        mid = self.advance(prev, 0.5 * (prev.t + t), depth + 1)
        return self.advance(mid, t, depth + 1)


def _closest_pair(x: np.ndarray) -> tuple[float, tuple[int, int]]:
    d = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(d, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return float(d[i, j]), (int(min(i, j)), int(max(i, j)))


def _ordered(times: np.ndarray, x: np.ndarray, xdot: np.ndarray, direction: int):
    if direction > 0:
        return times, x, xdot
    return times[::-1].copy(), x[::-1].copy(), xdot[::-1].copy()


def solve_algebraic(ivp: IVP, settings: SolverSettings | None = None) -> Trajectory:
    """Root trajectory on the fixed grid t0 + k*dt via the coefficient flow and root extraction."""
    settings = settings or get_settings()
    ivp.check_separation(settings)
    started = time.perf_counter()
    log_solve_start(ENGINE_ALGEBRAIC, ivp.x0.n_roots, ivp.x0.m1, ivp.t0, ivp.t_end, ivp.sample_dt)
    tracker = _AlgebraicTracker(ivp, settings)
    grid = ivp.grid()

    prev = tracker.initial()
    samples = [prev]
    for t in grid[1:]:
        prev = tracker.advance(prev, float(t))
        samples.append(prev)

    times, x, xdot = _ordered(
        np.array([s.t for s in samples], dtype=float),
        np.array([s.x for s in samples]),
        np.array([s.xdot for s in samples]),
        ivp.direction,
    )
    elapsed = time.perf_counter() - started
    log_solve_end(ENGINE_ALGEBRAIC, len(samples), elapsed, tracker.refinements, len(tracker.events))
    return Trajectory(
        times=times, x=x, m1=ivp.x0.m1, xdot=xdot,
        branch_events=tuple(sorted(tracker.events, key=lambda e: e.t)),
        meta={
            "engine": ENGINE_ALGEBRAIC,
            "m1": ivp.x0.m1,
            "order": ivp.model.order,
            "tolerances": settings.model_dump(),
            "refinements": tracker.refinements,
            "max_constraint_residual": max(s.constraint for s in samples),
            "max_redundant_residual": max(s.redundant for s in samples),
            "max_multiplicity_residual": max(s.multiplicity for s in samples),
            "numeric_coefficient_flow": tracker.flow.numeric,
            "elapsed_s": elapsed,
        },
    )


def integrate_direct(ivp: IVP, settings: SolverSettings | None = None, steps_per_sample: int = 1) -> Trajectory:
    """RK4 on xdot = h1(x) or (xdot, vdot) = (v, h2(x, v)), one step per sample unless halved near collisions."""
    settings = settings or get_settings()
    ivp.check_separation(settings)
    started = time.perf_counter()
    log_solve_start(ENGINE_DIRECT, ivp.x0.n_roots, ivp.x0.m1, ivp.t0, ivp.t_end, ivp.sample_dt)
    N, m1 = ivp.x0.n_roots, ivp.x0.m1
    order = ivp.model.order

    if order == 1:
        rhs1 = FirstOrderRHS(ivp.model, m1, settings)

        def field(t, z):
            return rhs1(t, z)

        z = np.array(ivp.x0.x, dtype=complex)
    else:
        rhs2 = SecondOrderRHS(ivp.model, m1, settings)

        def field(t, z):
            return np.concatenate([z[N:], rhs2(t, z[:N], z[N:])])

        z = np.concatenate([ivp.x0.x, ivp.x0.xdot]).astype(complex)

    grid = ivp.grid()
    slope = field(float(grid[0]), z)
    xs = [z[:N].copy()]
    vs = [slope[:N]]
    halvings = 0
    for t_start, t_stop in zip(grid[:-1], grid[1:]):
        t, h_nominal = float(t_start), (float(t_stop) - float(t_start)) / steps_per_sample
        for _ in range(steps_per_sample):
            k, h = _safe_step(z, slope[:N], h_nominal, N, t, settings)
            halvings += k
            try:
                for i in range(2**k):
                    z = rk4_step(field, t + i * h, z, h, slope if i == 0 else None)
                slope = field(t + h_nominal, z)
            except CollisionError as e:
                e.t = e.t if e.t is not None else t
                raise
            t += h_nominal
        xs.append(z[:N].copy())
        vs.append(slope[:N])

    times, x, xdot = _ordered(grid.astype(float), np.array(xs), np.array(vs), ivp.direction)
    elapsed = time.perf_counter() - started
    log_solve_end(ENGINE_DIRECT, len(grid), elapsed, halvings, 0)
    return Trajectory(
        times=times, x=x, m1=m1, xdot=xdot,
        meta={
            "engine": ENGINE_DIRECT,
            "m1": m1,
            "order": order,
            "tolerances": settings.model_dump(),
            "halvings": halvings,
            "elapsed_s": elapsed,
        },
    )


def _safe_step(z: np.ndarray, v: np.ndarray, h: float, N: int, t: float, settings: SolverSettings) -> tuple[int, float]:
    """Number of halvings k and substep h/2^k keeping max|v|*h within a quarter of the smallest gap."""
    gap = min_gap(z[:N])
    speed = float(np.max(np.abs(v)))
    k = 0
    while speed * abs(h) > 0.25 * gap:
        k += 1
        h /= 2
        if k > settings.max_halvings:
            raise StepUnderflowError(f"step fell below {abs(h):.3g} with roots {gap:.3g} apart", t)
        log_step_halving(t, h, gap)
    return k, h


class Comparison(NamedTuple):
    per_coordinate: np.ndarray
    max_deviation: float
    reference_scale: float  # 1 + max|x| over both trajectories

    def passed(self, relative_tolerance: float) -> bool:
        return self.max_deviation < relative_tolerance * self.reference_scale


def compare_trajectories(a: Trajectory, b: Trajectory) -> Comparison:
    """Per-coordinate max |a - b| on a shared time grid."""
    if a.x.shape != b.x.shape:
        raise ValueError(f"trajectory shapes differ: {a.x.shape} vs {b.x.shape}")
    if not np.allclose(a.times, b.times, rtol=0, atol=1e-9 * max(1.0, float(np.max(np.abs(a.times))))):
        raise ValueError("trajectories are sampled on different grids")
    dev = np.max(np.abs(a.x - b.x), axis=0)
    ref = 1.0 + float(max(np.max(np.abs(a.x)), np.max(np.abs(b.x))))
    return Comparison(dev, float(np.max(dev)), ref)
