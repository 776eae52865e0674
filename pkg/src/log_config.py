"""Structured logging for table builds, solves, refinements and verdicts."""
import logging
import os
import sys

LOG = logging.getLogger("multiroot")


def setup_logging(level: int | str | None = None) -> None:
    """Configure multiroot logger to stderr with timestamps."""
    if LOG.handlers:
        return
    if level is None:
        level = os.environ.get("LOG_LEVEL", "INFO").upper()
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(logging.Formatter("[%(asctime)s] %(levelname)-5s %(message)s", datefmt="%H:%M:%S"))
    LOG.addHandler(h)
    LOG.setLevel(level)


def log_command(name: str, args: dict) -> None:
    setup_logging()
    a = {k: str(v)[:120] for k, v in (args or {}).items() if v is not None}
    LOG.info("Command | name=%s | args=%s", name, a)


def log_tables_built(n_roots: int, m1: int, build_s: float) -> None:
    setup_logging()
    LOG.debug("Tables | N=%d | m1=%d | build_time=%.4fs", n_roots, m1, build_s)


def log_solve_start(engine: str, n_roots: int, m1: int, t0: float, t_end: float, dt: float) -> None:
    setup_logging()
    LOG.info("Solve start | engine=%s | N=%d | m1=%d | t=[%g, %g] | dt=%g", engine, n_roots, m1, t0, t_end, dt)


def log_solve_end(engine: str, samples: int, elapsed_s: float, refinements: int, events: int) -> None:
    setup_logging()
    LOG.info(
        "Solve end | engine=%s | samples=%d | time=%.2fs | refinements=%d | branch_events=%d",
        engine, samples, elapsed_s, refinements, events,
    )


def log_refinement(t: float, depth: int, reason: str) -> None:
    setup_logging()
    LOG.debug("Refine | t=%.6f | depth=%d | reason=%s", t, depth, reason)


def log_branch_event(t: float, pair: tuple[int, int], kind: str) -> None:
    setup_logging()
    LOG.info("Branch event | t=%.6f | pair=x%d,x%d | kind=%s", t, pair[0] + 1, pair[1] + 1, kind)


def log_step_halving(t: float, step: float, gap: float) -> None:
    setup_logging()
    LOG.debug("Step halving | t=%.6f | step=%.3g | min_gap=%.3g", t, step, gap)


def log_period_verdict(label: str, verdict) -> None:
    setup_logging()
    LOG.info("Period | %s | %s", label, verdict)


def log_compare(label: str, max_dev: float, tolerance: float, passed: bool) -> None:
    setup_logging()
    LOG.info("Compare | %s | max_dev=%.3e | tol=%.3e | pass=%s", label, max_dev, tolerance, passed)
