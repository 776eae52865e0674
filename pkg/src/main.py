"""CLI entrypoint: coefficient tables, solves, engine comparisons, period verdicts, example registry."""
import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

from src.coeffs import build_tables, tables_to_dict
from src.config import get_output_dir, get_settings
from src.data import get_examples, period_discrepancies
from src.dynamics import remark_identity_first, remark_identity_second, second_order_field, three_body_rhs, two_body_rhs
from src.errors import EXIT_FAILURE, EXIT_OK, ConfigError, MultirootError, NumericalError, exit_code_for
from src.experiment import ExperimentConfig, experiment_from_example, load_experiment
from src.log_config import log_command, log_compare, setup_logging
from src.period import period_study
from src.solver import compare_trajectories, integrate_direct, solve_algebraic
from src.state import ENGINE_ALGEBRAIC, ENGINE_BOTH, ENGINE_DIRECT, ENGINES, RootState
from src.utils import atomic_write, trajectory_to_csv, trajectory_to_json
from src.vieta import coeff_derivs_from_roots, coeff_second_derivs_from_roots, coeffs_from_roots, scale

DEFAULT_PERIOD_DT = 1e-2
DEFAULT_COMPARE_TOL = 1e-3


def _format_error(e: Exception) -> str:
    """Return a clear, user-facing error message with hint if possible."""
    msg = str(e).strip()
    if isinstance(e, ConfigError):
        if "unknown example" in msg:
            return f"[ERROR] {msg}\n  List the registry with: multiroot examples"
        return f"[ERROR] Invalid configuration.\n  Details: {msg}"
    if isinstance(e, NumericalError):
        when = f" at t={e.t:.17g}" if e.t is not None else ""
        return (
            f"[ERROR] Numerical failure{when}: {e.args[0] if e.args else msg}\n"
            "  Try a smaller --dt or adjust tolerances (MULTIROOT_* env vars, --tol-root)."
        )
    return f"[ERROR] {msg}"


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        config = load_experiment(Path(args.config))
    elif getattr(args, "example", None):
        config = experiment_from_example(args.example)
    else:
        raise ConfigError("pass --example <id> or --config <path>")
    return config


def _settings(args, config: ExperimentConfig):
    # CLI flags over config tolerances over environment
    base = config.settings(get_settings())
    return base.with_overrides(tol_root=getattr(args, "tol_root", None), tol_period=getattr(args, "tol_period", None))


def _run(engine: str, config: ExperimentConfig, settings):
    ivp = config.to_ivp()
    if engine == ENGINE_DIRECT:
        return integrate_direct(ivp, settings)
    return solve_algebraic(ivp, settings)


def _write(traj, path: Path, fmt: str) -> None:
    text = trajectory_to_json(traj) if fmt == "json" else trajectory_to_csv(traj)
    atomic_write(path, text)


def cmd_tables(args) -> int:
    tables = build_tables(args.N, args.m1)
    text = json.dumps(tables_to_dict(tables), indent=1)
    if args.out:
        atomic_write(Path(args.out), text + "\n")
        print(args.out)
    else:
        print(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    config = _load_config(args).with_span(args.t_end, args.dt)
    settings = _settings(args, config)
    engine = args.engine or config.engine
    fmt = args.format or config.format
    out = Path(args.out or config.output or get_output_dir() / f"{config.label}_{engine}.{fmt}")
    engines = (ENGINE_ALGEBRAIC, ENGINE_DIRECT) if engine == ENGINE_BOTH else (engine,)
    results = {e: _run(e, config, settings) for e in engines}
    for e, traj in results.items():
        path = out if len(engines) == 1 or e == ENGINE_ALGEBRAIC else out.with_name(f"{out.stem}_{e}{out.suffix}")
        _write(traj, path, fmt)
        print(path)
    return EXIT_OK


def _compare_one(config: ExperimentConfig, settings, tolerance: float):
    alg = _run(ENGINE_ALGEBRAIC, config, settings)
    direct = _run(ENGINE_DIRECT, config, settings)
    cmp = compare_trajectories(alg, direct)
    passed = cmp.passed(tolerance)
    log_compare(config.label, cmp.max_deviation, tolerance * cmp.reference_scale, passed)
    return cmp, passed


def _print_compare(label: str, cmp, tolerance: float, passed: bool) -> None:
    print(f"{label}:")
    for n, dev in enumerate(cmp.per_coordinate, start=1):
        print(f"  x{n}  max_dev={dev:.3e}")
    verdict = "PASS" if passed else "FAIL"
    print(f"  overall max_dev={cmp.max_deviation:.3e}  limit={tolerance * cmp.reference_scale:.3e}  {verdict}")


def cmd_compare(args) -> int:
    tolerance = args.tolerance
    if args.all:
        configs = [experiment_from_example(i).with_span(args.t_end, args.dt) for i in sorted(get_examples())]
    else:
        configs = [_load_config(args).with_span(args.t_end, args.dt)]
    with ThreadPoolExecutor(max_workers=min(len(configs), args.workers)) as pool:
        futures = [pool.submit(_compare_one, c, _settings(args, c), tolerance) for c in configs]
        outcomes = [f.result() for f in futures]
    ok = True
    for config, (cmp, passed) in zip(configs, outcomes):
        _print_compare(config.label, cmp, tolerance, passed)
        ok = ok and passed
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_period(args) -> int:
    config = _load_config(args)
    settings = _settings(args, config)
    study = period_study(
        config, settings,
        candidate=args.candidate,
        t_end=args.t_end,
        dt=args.dt if args.dt is not None else DEFAULT_PERIOD_DT,
        engine=args.engine or ENGINE_ALGEBRAIC,
    )
    print(f"{study.label}: candidate={study.candidate:g}  span={study.span:g}  verdict={study.overall}")
    for n, verdict in enumerate(study.per_coordinate, start=1):
        print(f"  x{n}  {verdict}")
    return EXIT_OK


def cmd_examples(args) -> int:
    for example_id, entry in sorted(get_examples().items()):
        model = entry["model"]
        comps = ", ".join(
            f"{c['law']}" + (f" r={c['r']}" if "r" in c else "") + (f" a={c['a']}" if "a" in c else "")
            for c in model.get("components", [])
        )
        periods = " ".join(f"{k}:{v}" for k, v in entry.get("published_periods", {}).items())
        differing = period_discrepancies(entry)
        if differing:
            periods += " (reproduced " + " ".join(f"{k}:{r}" for k, (_, r) in differing.items()) + ")"
        print(
            f"{example_id}  N={len(entry['x0'])}  m1={entry['m1']}  kind={model['kind']}  [{comps}]  "
            f"omega={model.get('omega', 2 * math.pi):.6g}  periods {periods}"
            + ("  (asymptotic)" if entry.get("asymptotic") else "")
        )
    return EXIT_OK


def cmd_check(args) -> int:
    """Randomized consistency checks: remark identities and the N=2/N=3 closed forms."""
    rng = np.random.default_rng(args.seed)
    worst = {"remark_first": 0.0, "remark_second": 0.0, "two_body": 0.0, "three_body": 0.0}
    for _ in range(args.trials):
        N = int(rng.integers(2, 4))
        m1 = int(rng.integers(1, 6))
        x = rng.normal(size=N) + 1j * rng.normal(size=N)
        v = rng.normal(size=N) + 1j * rng.normal(size=N)
        acc = rng.normal(size=N) + 1j * rng.normal(size=N)
        state = RootState(x, m1, v)
        tables = build_tables(N, m1)
        y = coeffs_from_roots(state)[:N]
        ydot = coeff_derivs_from_roots(state)
        yddot = coeff_second_derivs_from_roots(state, acc)
        ref = scale(x, m1)
        worst["remark_first"] = max(worst["remark_first"], abs(remark_identity_first(x, v, y, ydot, tables)) / ref)
        worst["remark_second"] = max(
            worst["remark_second"], abs(remark_identity_second(x, v, y, ydot, yddot, tables)) / ref
        )
        generic = second_order_field(x, v, y, ydot, yddot, tables)
        special = (two_body_rhs if N == 2 else three_body_rhs)(x, v, yddot, m1)
        key = "two_body" if N == 2 else "three_body"
        rel = float(np.max(np.abs(generic - np.array(special))) / (1.0 + np.max(np.abs(generic))))
        worst[key] = max(worst[key], rel)
    for k, val in worst.items():
        print(f"{k}: max relative residual {val:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiroot", description="Solvable root dynamics of polynomials with a multiple root")
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--example", help="built-in example id, e.g. 3.1.1")
        g.add_argument("--config", help="path to an experiment JSON document")

    def tolerances(p):
        p.add_argument("--tol-root", type=float, default=None)
        p.add_argument("--tol-period", type=float, default=None)

    p = sub.add_parser("tables", help="emit alpha/gamma/theta/phi tables as JSON")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("solve", help="solve an IVP and write the trajectory")
    source(p)
    p.add_argument("--engine", choices=ENGINES, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    tolerances(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run both engines and report max deviations")
    source(p)
    p.add_argument("--all", action="store_true", help="compare every built-in example")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=DEFAULT_COMPARE_TOL, help="relative to 1+max|x|")
    p.add_argument("--workers", type=int, default=4)
    tolerances(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("period", help="estimate the period of a solution")
    source(p)
    p.add_argument("--engine", choices=(ENGINE_ALGEBRAIC, ENGINE_DIRECT), default=None)
    p.add_argument("--candidate", type=float, default=None, help="default: generating model period")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    tolerances(p)
    p.set_defaults(func=cmd_period)

    p = sub.add_parser("examples", help="list built-in examples")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("check", help="randomized formula consistency checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    setup_logging()
    args = build_parser().parse_args(argv)
    log_command(args.command, {k: v for k, v in vars(args).items() if k not in ("func", "command")})
    try:
        return args.func(args)
    except (MultirootError, ValueError) as e:
        print(_format_error(e), file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
