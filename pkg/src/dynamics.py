"""Right-hand sides of the solvable root systems.

h-functions take coefficient values (y, ydot, yddot) rather than model closures,
so they can be evaluated on any state; FirstOrderRHS / SecondOrderRHS bind a
generating model and close the loop through the Vieta relations.
Indices n are 1-based as in the formulas; arrays are 0-based.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from src.coeffs import CoefficientTables, build_tables
from src.config import SolverSettings
from src.errors import CollisionError, ConfigError
from src.models import GeneratingModel, model_rhs
from src.vieta import root_jet

_DEFAULT_SETTINGS = SolverSettings()


def _as_complex(v) -> np.ndarray:
    return np.asarray(v, dtype=complex).ravel()


def check_distinct(x, settings: SolverSettings | None = None, only_first: bool = False) -> None:
    """Raise CollisionError when two roots are within eps_coll (only pairs with x1 if only_first)."""
    settings = settings or _DEFAULT_SETTINGS
    x = _as_complex(x)
    eps = settings.eps_coll(float(np.max(np.abs(x))))
    d = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(d, np.inf)
    if only_first:
        d[1:, 1:] = np.inf
    i, j = np.unravel_index(np.argmin(d), d.shape)
    if d[i, j] < eps:
        pair = (int(min(i, j)), int(max(i, j)))
        raise CollisionError(f"roots x{pair[0] + 1} and x{pair[1] + 1} within {eps:.3g}", pair)


def _prod(factors: np.ndarray, use_log: bool) -> complex:
    if not use_log:
        return complex(np.prod(factors))
    # log-magnitude accumulation for long products
    return complex(np.exp(np.sum(np.log(factors))))


def _row_products(terms: np.ndarray, use_log: bool) -> np.ndarray:
    if not use_log:
        return np.prod(terms, axis=1)
    return np.exp(np.sum(np.log(terms), axis=1))


def _use_log(tables: CoefficientTables, settings: SolverSettings) -> bool:
    return tables.degree > settings.log_products_threshold


def pair_products(x, use_log: bool = False) -> np.ndarray:
    """P_n = prod_{l != n} (x_n - x_l)."""
    x = _as_complex(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return _row_products(diff, use_log)


def _cross_products(x, use_log: bool) -> np.ndarray:
    """prod_{l>=2, l != n} (x_n - x_l)(x1 - x_l) for n = 2..N."""
    x = _as_complex(x)
    xs = x[1:]
    terms = (xs[:, None] - xs[None, :]) * (x[0] - xs)[None, :]
    np.fill_diagonal(terms, 1.0)
    return _row_products(terms, use_log)


def _weighted_sum(x1: complex, v: np.ndarray, tables: CoefficientTables) -> complex:
    """sum_j (N-j+1)_{m1} x1^{N-j} v_j."""
    N = tables.n_roots
    return complex(np.sum(tables.weights_array * np.power(complex(x1), N - np.arange(1, N + 1)) * v))


def _x1_blocks(x1: complex, tables: CoefficientTables):
    """L = [A^{(N)}]^{-1}(x1), its first two x1-derivatives, and those of c_m = gamma_m x1^m."""
    e0, e1, e2, alpha1, alpha2, m, gamma1, gamma2 = tables.x1_derivative_terms
    pw = np.cumprod(np.concatenate([[1.0 + 0j], np.full(tables.n_roots, complex(x1))]))
    L = tables.alpha_array * pw[e0]
    L[np.diag_indices_from(L)] += 1.0
    L1 = alpha1 * pw[e1]
    L2 = alpha2 * pw[e2]
    c1 = gamma1 * pw[m - 1]
    c2 = gamma2 * pw[np.maximum(m - 2, 0)]
    return L, L1, L2, c1, c2


def _x1_dot(x: np.ndarray, ydot: np.ndarray, tables: CoefficientTables, use_log: bool) -> complex:
    q = _prod(x[0] - x[1:], use_log)
    return -_weighted_sum(x[0], ydot, tables) / (tables.factorial * q)


def _x1_ddot(x: np.ndarray, xdot: np.ndarray, yddot: np.ndarray, tables: CoefficientTables, use_log: bool) -> complex:
    drive = _x1_dot(x, yddot, tables, use_log)
    velocity = xdot[0] * np.sum((tables.m1 * xdot[0] + 2.0 * xdot[1:]) / (x[0] - x[1:]))
    return complex(drive + velocity)


def x1_dot(x, ydot, tables: CoefficientTables, settings: SolverSettings | None = None) -> complex:
    """xdot_1 = -[(m1+1)! prod_{n>=2}(x1 - x_n)]^{-1} sum_j (N-j+1)_{m1} x1^{N-j} ydot_j."""
    settings = settings or _DEFAULT_SETTINGS
    x = _as_complex(x)
    check_distinct(x, settings, only_first=True)
    return _x1_dot(x, _as_complex(ydot), tables, _use_log(tables, settings))


def x1_ddot(x, xdot, yddot, tables: CoefficientTables, settings: SolverSettings | None = None) -> complex:
    """x1 acceleration including the sum_{n>=2} (m1 xdot_1 + 2 xdot_n)/(x1 - x_n) velocity term."""
    settings = settings or _DEFAULT_SETTINGS
    x, xdot = _as_complex(x), _as_complex(xdot)
    check_distinct(x, settings, only_first=True)
    return _x1_ddot(x, xdot, _as_complex(yddot), tables, _use_log(tables, settings))


def simple_root_velocity(x, xi_dot, use_log: bool = False) -> np.ndarray:
    """xdot_n = -P_n^{-1} sum_m x_n^{N-m} xidot_m for the simple-root polynomial."""
    x = _as_complex(x)
    V = np.vander(x, x.size)
    return -(V @ _as_complex(xi_dot)) / pair_products(x, use_log)


def simple_root_acceleration(x, xdot, xi_ddot, use_log: bool = False) -> np.ndarray:
    """xddot_n = sum_{l != n} 2 xdot_n xdot_l/(x_n - x_l) - P_n^{-1} sum_m x_n^{N-m} xiddot_m."""
    x, xdot = _as_complex(x), _as_complex(xdot)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    coupling = 2.0 * xdot[:, None] * xdot[None, :] / diff
    np.fill_diagonal(coupling, 0.0)
    V = np.vander(x, x.size)
    return coupling.sum(axis=1) - (V @ _as_complex(xi_ddot)) / pair_products(x, use_log)


def xi_dot(x, y, ydot, tables: CoefficientTables, xdot1: complex | None = None,
           settings: SolverSettings | None = None) -> np.ndarray:
    """g^{(1)}: xidot = L ydot + xdot_1 (L' y - c'), xdot_1 from x1_dot unless given."""
    x, y, ydot = _as_complex(x), _as_complex(y), _as_complex(ydot)
    if xdot1 is None:
        xdot1 = x1_dot(x, ydot, tables, settings)
    L, L1, _, c1, _ = _x1_blocks(x[0], tables)
    return L @ ydot + xdot1 * (L1 @ y - c1)


def xi_ddot(x, xdot, y, ydot, yddot, tables: CoefficientTables, xddot1: complex | None = None,
            settings: SolverSettings | None = None) -> np.ndarray:
    """g~^{(2)} (xddot_1 given) or g^{(2)} (xddot_1 from x1_ddot)."""
    x, xdot = _as_complex(x), _as_complex(xdot)
    y, ydot, yddot = _as_complex(y), _as_complex(ydot), _as_complex(yddot)
    if xddot1 is None:
        xddot1 = x1_ddot(x, xdot, yddot, tables, settings)
    L, L1, L2, c1, c2 = _x1_blocks(x[0], tables)
    v1 = xdot[0]
    return L @ yddot + 2.0 * v1 * (L1 @ ydot) + xddot1 * (L1 @ y - c1) + v1**2 * (L2 @ y - c2)


def first_order_field(x, y, ydot, tables: CoefficientTables, settings: SolverSettings | None = None) -> np.ndarray:
    """h^{(1)}_n for n = 1..N."""
    settings = settings or _DEFAULT_SETTINGS
    x, y, ydot = _as_complex(x), _as_complex(y), _as_complex(ydot)
    check_distinct(x, settings)
    use_log = _use_log(tables, settings)
    out = np.empty(x.size, dtype=complex)
    out[0] = _x1_dot(x, ydot, tables, use_log)

    L, L1, _, c1, _ = _x1_blocks(x[0], tables)
    xs = x[1:]
    V = np.vander(xs, x.size)
    P = pair_products(x, use_log)[1:]
    s1 = _weighted_sum(x[0], ydot, tables)
    direct = -(V @ (L @ ydot)) / P
    chain = -s1 * (V @ (L1 @ y - c1)) / ((xs - x[0]) ** 2 * tables.factorial * _cross_products(x, use_log))
    out[1:] = direct + chain
    return out


def second_order_field(x, xdot, y, ydot, yddot, tables: CoefficientTables,
                       settings: SolverSettings | None = None) -> np.ndarray:
    """h^{(2)}_n for n = 1..N."""
    settings = settings or _DEFAULT_SETTINGS
    x, xdot = _as_complex(x), _as_complex(xdot)
    y, ydot, yddot = _as_complex(y), _as_complex(ydot), _as_complex(yddot)
    check_distinct(x, settings)
    use_log = _use_log(tables, settings)
    m1 = tables.m1
    out = np.empty(x.size, dtype=complex)
    out[0] = _x1_ddot(x, xdot, yddot, tables, use_log)

    L, L1, L2, c1, c2 = _x1_blocks(x[0], tables)
    x1, v1 = x[0], xdot[0]
    xs, vs = x[1:], xdot[1:]
    V = np.vander(xs, x.size)
    P = pair_products(x, use_log)[1:]

    diff = xs[:, None] - x[None, :]
    diff[np.arange(xs.size), np.arange(1, x.size)] = 1.0
    coupling = 2.0 * vs[:, None] * xdot[None, :] / diff
    coupling[np.arange(xs.size), np.arange(1, x.size)] = 0.0
    pair = coupling.sum(axis=1)

    forcing = (
        V @ (L @ yddot)
        - v1**2 * (V @ c2)
        + v1**2 * (V @ (L2 @ y))
        + 2.0 * v1 * (V @ (L1 @ ydot))
    )
    s2 = _weighted_sum(x1, yddot, tables)
    x1_drive = s2 / ((xs - x1) ** 2 * tables.factorial * _cross_products(x, use_log)) + v1 / P * np.sum(
        (m1 * v1 + 2.0 * vs) / (x1 - xs)
    )
    x1_shift = V @ c1 - V @ (L1 @ y)
    out[1:] = pair - forcing / P + x1_drive * x1_shift
    return out


def h_first(n: int, x, y, ydot, tables: CoefficientTables, settings: SolverSettings | None = None) -> complex:
    """h^{(1)}_n (1-based n); n = 1 coincides with x1_dot."""
    if not 1 <= n <= len(x):
        raise IndexError(f"n must be in 1..{len(x)}, got {n}")
    if n == 1:
        check_distinct(x, settings)
        return x1_dot(x, ydot, tables, settings)
    return complex(first_order_field(x, y, ydot, tables, settings)[n - 1])


def h_second(n: int, x, xdot, y, ydot, yddot, tables: CoefficientTables,
             settings: SolverSettings | None = None) -> complex:
    """h^{(2)}_n (1-based n); n = 1 coincides with x1_ddot."""
    if not 1 <= n <= len(x):
        raise IndexError(f"n must be in 1..{len(x)}, got {n}")
    if n == 1:
        check_distinct(x, settings)
        return x1_ddot(x, xdot, yddot, tables, settings)
    return complex(second_order_field(x, xdot, y, ydot, yddot, tables, settings)[n - 1])


def two_body_rhs(x, xdot, f2_values, m1: int, settings: SolverSettings | None = None) -> tuple[complex, complex]:
    """Closed-form N=2 accelerations given f^{(2)} evaluated at the Vieta coefficients."""
    check_distinct(x, settings)
    x1, x2 = _as_complex(x)
    v1, v2 = _as_complex(xdot)
    f1, f2 = _as_complex(f2_values)
    d = x1 - x2
    bracket = v1 * (m1 * v1 + 2.0 * v2) / d
    a1 = -((m1 + 1) * x1 * f1 + f2) / ((m1 + 1) * d) + bracket
    a2 = ((m1 * x1 + x2) * f1 + f2) / d - (m1 + 1) * bracket
    return complex(a1), complex(a2)


def three_body_rhs(x, xdot, f2_values, m1: int,
                   settings: SolverSettings | None = None) -> tuple[complex, complex, complex]:
    """Closed-form N=3 accelerations given f^{(2)} evaluated at the Vieta coefficients."""
    check_distinct(x, settings)
    x1, x2, x3 = _as_complex(x)
    v1, v2, v3 = _as_complex(xdot)
    f1, f2, f3 = _as_complex(f2_values)
    k = m1 * (m1 + 1)

    a1 = v1 * ((m1 * v1 + 2 * v2) / (x1 - x2) + (m1 * v1 + 2 * v3) / (x1 - x3)) - (
        (m1 + 2) * (m1 + 1) * x1**2 * f1 + 2 * (m1 + 1) * x1 * f2 + 2 * f3
    ) / (2 * (m1 + 1) * (x1 - x2) * (x1 - x3))

    def partner(xa, va, xb, vb):
        return (
            2 * k * v1**2 * (xb - x1)
            + 4 * (m1 + 1) * v1 * va * (xb - xa)
            + 4 * va * vb * (x1 - xa)
            + (k * x1**2 + 2 * xa * (m1 * x1 + xa)) * f1
            + 2 * (m1 * x1 + xa) * f2
            + 2 * f3
        )

    a2 = partner(x2, v2, x3, v3) / (2 * (x1 - x2) * (x2 - x3))
    a3 = -partner(x3, v3, x2, v2) / (2 * (x1 - x3) * (x2 - x3))
    return complex(a1), complex(a2), complex(a3)


def remark_identity_first(x, xdot, y, ydot, tables: CoefficientTables) -> complex:
    """sum_j x1^{N-j} xidot_j - sum_j (N-j+1)_{m1}/(m1+1)! x1^{N-j} ydot_j; zero on consistent states."""
    x, xdot = _as_complex(x), _as_complex(xdot)
    xid = xi_dot(x, y, ydot, tables, xdot1=xdot[0])
    head = np.sum(np.power(x[0], x.size - np.arange(1, x.size + 1)) * xid)
    return complex(head - _weighted_sum(x[0], _as_complex(ydot), tables) / tables.factorial)


def remark_identity_second(x, xdot, y, ydot, yddot, tables: CoefficientTables) -> complex:
    """Second-order analogue, with the -m1 xdot_1^2 sum_k prod_{l != k} (x1 - x_l) correction."""
    x, xdot = _as_complex(x), _as_complex(xdot)
    xidd = xi_ddot(x, xdot, y, ydot, yddot, tables)
    N = x.size
    head = np.sum(np.power(x[0], N - np.arange(1, N + 1)) * xidd)
    gaps = x[0] - x[1:]
    cross = sum(np.prod(np.delete(gaps, k)) for k in range(gaps.size))
    rhs = _weighted_sum(x[0], _as_complex(yddot), tables) / tables.factorial - tables.m1 * xdot[0] ** 2 * cross
    return complex(head - rhs)


@dataclass(frozen=True)
class FirstOrderRHS:
    """xdot = h^{(1)}(x; y(x), f^{(1)}(t, y(x)))."""

    model: GeneratingModel
    m1: int
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.model.order != 1:
            raise ValueError("FirstOrderRHS needs a first-order generating model")
        if self.m1 < 1:
            raise ConfigError("m1 must be ≥ 1")

    @property
    def n_roots(self) -> int:
        return self.model.dimension

    @cached_property
    def tables(self) -> CoefficientTables:
        return build_tables(self.n_roots, self.m1)

    def __call__(self, t: float, x) -> np.ndarray:
        x = _as_complex(x)
        y = root_jet(x, self.m1)[0][1 : self.n_roots + 1]
        f = model_rhs(self.model, t, y)
        return first_order_field(x, y, f, self.tables, self.settings)


@dataclass(frozen=True)
class SecondOrderRHS:
    """xddot = h^{(2)}(x, xdot; y, ydot from Vieta, f^{(2)}(t, y, ydot))."""

    model: GeneratingModel
    m1: int
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.model.order != 2:
            raise ValueError("SecondOrderRHS needs a second-order generating model")
        if self.m1 < 1:
            raise ConfigError("m1 must be ≥ 1")

    @property
    def n_roots(self) -> int:
        return self.model.dimension

    @cached_property
    def tables(self) -> CoefficientTables:
        return build_tables(self.n_roots, self.m1)

    def __call__(self, t: float, x, xdot) -> np.ndarray:
        x, xdot = _as_complex(x), _as_complex(xdot)
        p, dp, _ = root_jet(x, self.m1, xdot)
        y, ydot = p[1 : self.n_roots + 1], dp[1 : self.n_roots + 1]
        f = model_rhs(self.model, t, y, ydot)
        return second_order_field(x, xdot, y, ydot, f, self.tables, self.settings)
