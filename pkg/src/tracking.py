"""Root extraction and continuity tracking between samples."""
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.signal import lfilter

from src.coeffs import CoefficientTables
from src.config import SolverSettings
from src.errors import RootFindingError, RootTrackingError
from src.vieta import multiple_root_equation


class Assignment(NamedTuple):
    permutation: np.ndarray  # next[permutation[i]] continues prev[i]
    ambiguous: bool
    margin: float  # smallest sqrt(cost increase) of swapping two matched pairs


def min_gap(values) -> float:
    v = np.asarray(values, dtype=complex).ravel()
    if v.size < 2:
        return float("inf")
    d = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def roots_of(poly) -> np.ndarray:
    """All roots of a polynomial given by descending coefficients (companion-matrix eigenvalues)."""
    p = np.asarray(poly, dtype=complex).ravel()
    if p.size < 2:
        raise ValueError("polynomial degree must be ≥ 1")
    if p[0] == 0:
        raise ValueError("leading coefficient must be nonzero")
    if not np.all(np.isfinite(p)):
        raise RootFindingError("polynomial coefficients are not finite")
    degree = p.size - 1
    r = np.roots(p)
    # np.roots drops trailing zero coefficients together with their zero roots
    if r.size < degree:
        r = np.concatenate([r, np.zeros(degree - r.size, dtype=complex)])
    if not np.all(np.isfinite(r)):
        raise RootFindingError("companion eigenvalues are not finite")
    return r.astype(complex)


def track_assignment(prev, nxt, eps: float | None = None) -> Assignment:
    """Minimal total squared distance matching of nxt onto prev."""
    prev = np.asarray(prev, dtype=complex).ravel()
    nxt = np.asarray(nxt, dtype=complex).ravel()
    if prev.size != nxt.size:
        raise ValueError(f"cannot match {nxt.size} roots onto {prev.size}")
    if eps is None:
        scale_x = float(max(np.max(np.abs(prev), initial=0.0), np.max(np.abs(nxt), initial=0.0)))
        eps = SolverSettings().eps_coll(scale_x)
    cost = np.abs(prev[:, None] - nxt[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    perm = cols[np.argsort(rows)]

    matched = cost[:, perm]
    d = np.diag(matched)
    delta = matched + matched.T - d[:, None] - d[None, :]
    upper = delta[np.triu_indices(prev.size, k=1)]
    margin = float(np.sqrt(max(upper.min(), 0.0))) if upper.size else float("inf")
    return Assignment(perm, margin < eps, margin)


def newton_polish(coeffs: np.ndarray, seed: complex, max_iter: int, tol: float) -> tuple[complex, bool]:
    """Newton iteration on a polynomial; returns (root, converged)."""
    deriv = np.polyder(coeffs)
    z = complex(seed)
    for _ in range(max_iter):
        fz = np.polyval(coeffs, z)
        dz = np.polyval(deriv, z)
        if fz == 0:
            return z, True
        if dz == 0 or not np.isfinite(dz):
            return z, False
        step = fz / dz
        z = z - step
        if not np.isfinite(z):
            return z, False
        if abs(step) <= tol * (1.0 + abs(z)):
            # one more step to reach machine precision
            fz = np.polyval(coeffs, z)
            dz = np.polyval(deriv, z)
            if dz != 0:
                z = z - fz / dz
            return z, True
    return z, False


def track_multiple_root(y, seed: complex, tables: CoefficientTables, settings: SolverSettings) -> complex:
    """Simple root of the multiple-root equation continuing `seed`.

    Newton from the seed is accepted when it lands within half the local root gap
    of the equation root nearest the seed; otherwise that nearest root is used.
    """
    coeffs = multiple_root_equation(y, tables)
    candidates = roots_of(coeffs)
    nearest = candidates[np.argmin(np.abs(candidates - seed))]
    others = candidates[np.abs(candidates - nearest) > 0]
    gap = float(np.min(np.abs(others - nearest))) if others.size else float("inf")

    z, converged = newton_polish(coeffs, seed, settings.max_newton, settings.tol_root)
    if converged and abs(z - nearest) <= 0.5 * gap:
        return z
    z, converged = newton_polish(coeffs, nearest, settings.max_newton, settings.tol_root)
    if not converged and not np.isfinite(z):
        raise RootTrackingError(f"Newton failed near x1={seed:.6g}")
    return z if abs(z - nearest) <= 0.5 * gap else complex(nearest)


def deflate(poly, root: complex, times: int) -> tuple[np.ndarray, np.ndarray]:
    """Divide (z - root) out `times` times by forward synthetic division; returns (quotient, remainders)."""
    q = np.asarray(poly, dtype=complex).ravel()
    remainders = np.empty(times, dtype=complex)
    for k in range(times):
        if q.size < 2:
            raise ValueError("cannot deflate below degree 0")
        # out[i] = q[i] + root * out[i-1]
        out = lfilter([1.0], [1.0, -complex(root)], q)
        remainders[k] = out[-1]
        q = out[:-1]
    return q, remainders
