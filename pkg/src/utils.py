"""Shared helpers: complex/rate parsing, 17-digit formatting, atomic writes, trajectory CSV/JSON."""
import csv
import io
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from src.errors import ConfigError
from src.state import BranchEvent, Trajectory


def parse_complex(value: Any) -> complex:
    """Accept [re, im], a real number, or text like "3.19+3.67i"."""
    if isinstance(value, bool):
        raise ConfigError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex pair must have 2 entries, got {len(value)}")
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"not a complex pair: {value!r}") from e
    if isinstance(value, str):
        s = value.replace(" ", "").replace("i", "j")
        try:
            return complex(s)
        except ValueError as e:
            raise ConfigError(f"not a complex number: {value!r}") from e
    raise ConfigError(f"not a complex number: {value!r}")


def parse_complex_list(values: Any, name: str) -> list[complex]:
    if not isinstance(values, (list, tuple)):
        raise ConfigError(f"{name} must be a list")
    return [parse_complex(v) for v in values]


def complex_to_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def parse_rate(value: Any) -> Fraction:
    """Exact nonzero rational from "1/2", 0.5 or 2."""
    try:
        r = Fraction(str(value).strip()) if not isinstance(value, Fraction) else value
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"rate must be a rational number, got {value!r}") from e
    if r == 0:
        raise ConfigError("rates must be nonzero")
    return r


def format_float(v: float) -> str:
    """17 significant digits: round-trips every double."""
    return format(float(v), ".17g")


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory and os.replace; no partial file on failure."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_header(n_roots: int) -> list[str]:
    cols = ["t"]
    for n in range(1, n_roots + 1):
        cols += [f"re_x{n}", f"im_x{n}"]
    return cols


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(traj.n_roots))
    for t, row in zip(traj.times, traj.x):
        cells = [format_float(t)]
        for z in row:
            cells += [format_float(z.real), format_float(z.imag)]
        w.writerow(cells)
    return buf.getvalue()


def read_trajectory_csv(text: str, m1: int) -> Trajectory:
    """Inverse of trajectory_to_csv (positions only)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "t":
        raise ConfigError("trajectory CSV must start with a 't,re_x1,im_x1,...' header")
    n_roots = (len(rows[0]) - 1) // 2
    if rows[0] != csv_header(n_roots):
        raise ConfigError(f"unexpected trajectory CSV header: {rows[0]}")
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, 1 + 2 * n_roots)
    x = data[:, 1::2] + 1j * data[:, 2::2]
    return Trajectory(times=data[:, 0], x=x, m1=m1)


def _pairs(arr: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def trajectory_to_json(traj: Trajectory) -> str:
    doc = {
        "columns": csv_header(traj.n_roots),
        "m1": traj.m1,
        "t": [float(t) for t in traj.times],
        "x": _pairs(traj.x),
        "branch_events": [
            {"t": e.t, "pair": [e.pair[0] + 1, e.pair[1] + 1], "kind": e.kind, "gap": e.gap}
            for e in traj.branch_events
        ],
        "meta": dict(traj.meta),
    }
    if traj.xdot is not None:
        # NaN at collisions is written as null
        doc["xdot"] = [[None if not np.isfinite(z) else p for z, p in zip(row, prow)]
                       for row, prow in zip(traj.xdot, _pairs(traj.xdot))]
    return json.dumps(doc, indent=1)


def read_trajectory_json(text: str) -> Trajectory:
    doc = json.loads(text)
    x = np.array([[complex(re_, im) for re_, im in row] for row in doc["x"]], dtype=complex)
    xdot = None
    if "xdot" in doc:
        xdot = np.array(
            [[complex(*p) if p is not None else complex(np.nan, np.nan) for p in row] for row in doc["xdot"]],
            dtype=complex,
        )
    events = tuple(
        BranchEvent(t=e["t"], pair=(e["pair"][0] - 1, e["pair"][1] - 1), kind=e["kind"], gap=e["gap"])
        for e in doc.get("branch_events", [])
    )
    return Trajectory(
        times=np.array(doc["t"], dtype=float), x=x, m1=int(doc["m1"]), xdot=xdot,
        branch_events=events, meta=doc.get("meta", {}),
    )
