"""Root <-> coefficient maps for p(z) = (z - x1)^{m1} prod_n (z - x_n) = z^{N+m1} + sum_n y_n z^{N+m1-n}."""
from functools import lru_cache

import numpy as np

from src.coeffs import CoefficientTables, binomial, design_matrix, elem_sym_all, pochhammer
from src.state import RootState


def scale(x, m1: int) -> float:
    """max(1, max|x_n|)^{N+m1}: magnitude reference for absolute tolerances."""
    x = np.asarray(x)
    return float(max(1.0, float(np.max(np.abs(x)))) ** (x.size + m1))


@lru_cache(maxsize=64)
def _binomial_row(k: int) -> np.ndarray:
    row = np.array([binomial(k, j) for j in range(k + 1)], dtype=float)
    row.setflags(write=False)
    return row


def _power(x1: complex, k: int, size: int) -> np.ndarray:
    """Descending coefficients of (z - x1)^k, left-padded with zeros to `size` entries."""
    out = np.zeros(size, dtype=complex)
    powers = np.cumprod(np.concatenate([[1.0 + 0j], np.full(k, -x1)]))
    out[size - k - 1 :] = _binomial_row(k) * powers
    return out


def root_jet(x, m1: int, xdot=None, xddot=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Monic coefficients [1, y_1, ..., y_{N+m1}] with their first two time derivatives.

    p = (z - x1)^{m1+1} q(z) with q = prod_{n>=2} (z - x_n); the derivatives follow
    from the product rule, the repeated factor in closed form.
    """
    x = np.asarray(x, dtype=complex).ravel()
    N = x.size
    u = np.zeros(N, dtype=complex) if xdot is None else np.asarray(xdot, dtype=complex).ravel()
    w = np.zeros(N, dtype=complex) if xddot is None else np.asarray(xddot, dtype=complex).ravel()
    K = m1 + 1
    x1 = complex(x[0])
    B = _power(x1, K, K + 1)
    B1 = _power(x1, K - 1, K + 1)
    dB = -K * u[0] * B1
    ddB = -K * w[0] * B1 + K * (K - 1) * u[0] ** 2 * _power(x1, K - 2, K + 1)

    q = np.ones(1, dtype=complex)
    dq = np.zeros(1, dtype=complex)
    ddq = np.zeros(1, dtype=complex)
    for v, r, a in zip(x[1:], u[1:], w[1:]):
        f = np.array([1.0, -v])
        ddq = np.convolve(ddq, f) + np.concatenate([[0.0], -2.0 * r * dq - a * q])
        dq = np.convolve(dq, f) + np.concatenate([[0.0], -r * q])
        q = np.convolve(q, f)

    p = np.convolve(B, q)
    dp = np.convolve(dB, q) + np.convolve(B, dq)
    ddp = np.convolve(ddB, q) + 2.0 * np.convolve(dB, dq) + np.convolve(B, ddq)
    return p, dp, ddp


def _signs(count: int) -> np.ndarray:
    return (-1.0) ** np.arange(1, count + 1)


def coeffs_from_roots(state: RootState) -> np.ndarray:
    """y_1..y_{N+m1}, y_j = (-1)^j sigma_j over the multiset with x1 repeated m1+1 times."""
    return root_jet(state.x, state.m1)[0][1:]


def coeff_derivs_from_roots(state: RootState, count: int | None = None) -> np.ndarray:
    """First `count` (default N) coefficient velocities; the x1 slot carries multiplicity m1+1."""
    if state.xdot is None:
        raise ValueError("coefficient derivatives need root velocities")
    count = state.n_roots if count is None else count
    return root_jet(state.x, state.m1, state.xdot)[1][1 : count + 1]


def coeff_second_derivs_from_roots(state: RootState, xddot, count: int | None = None) -> np.ndarray:
    """First `count` (default N) coefficient accelerations from (x, xdot, xddot)."""
    if state.xdot is None:
        raise ValueError("coefficient accelerations need root velocities")
    count = state.n_roots if count is None else count
    return root_jet(state.x, state.m1, state.xdot, xddot)[2][1 : count + 1]


def xi_from_roots(x) -> np.ndarray:
    """xi_n = (-1)^n sigma_n(x_1..x_N): coefficients of the simple-root polynomial."""
    e = elem_sym_all(x)
    return _signs(e.size - 1) * e[1:]


def xi_from_y(y, x1: complex, tables: CoefficientTables) -> np.ndarray:
    """xi_n = y_n + sum_{j<n} alpha_{nj} x1^{n-j} y_j - gamma_n x1^n."""
    y = np.asarray(y, dtype=complex)[: tables.n_roots]
    x1 = complex(x1)
    n = np.arange(1, tables.n_roots + 1)
    powers = np.power(x1, np.maximum(tables.lag, 0))
    return y + (tables.alpha_array * powers) @ y - tables.gamma_array * np.power(x1, n)


def extend_y(y, x1: complex, tables: CoefficientTables) -> np.ndarray:
    """y_{N+1}..y_{N+m1} from the first N coefficients and the multiple root."""
    N, m1 = tables.n_roots, tables.m1
    y = np.asarray(y, dtype=complex)[:N]
    x1 = complex(x1)
    out = np.empty(m1, dtype=complex)
    j = np.arange(1, N)
    for k in range(1, m1 + 1):
        head = (-1) ** k * binomial(m1, k) * x1**k * y[N - 1]
        mid = np.sum(tables.theta_array[k - 1] * np.power(x1, N + k - j) * y[: N - 1])
        out[k - 1] = head + mid + x1 ** (N + k) * tables.phi_array[k - 1]
    return out


def assemble_polynomial(y_full) -> np.ndarray:
    """Monic coefficient vector in descending powers: [1, y_1, ..., y_{N+m1}]."""
    return np.concatenate([[1.0 + 0j], np.asarray(y_full, dtype=complex)])


def redundant_rows_residual(y_full, x1: complex, tables: CoefficientTables) -> np.ndarray:
    """(A xi + a - y) on the last m1 rows, with xi solved from the first N rows."""
    y_full = np.asarray(y_full, dtype=complex)
    A, a = design_matrix(x1, tables)
    xi = xi_from_y(y_full, x1, tables)
    return (A @ xi + a - y_full)[tables.n_roots :]


def multiple_root_equation(y, tables: CoefficientTables) -> np.ndarray:
    """Descending coefficients of (N+1)_{m1} z^N + sum_j (N+1-j)_{m1} y_j z^{N-j}; x1 is a simple root."""
    y = np.asarray(y, dtype=complex)[: tables.n_roots]
    lead = float(pochhammer(tables.n_roots + 1, tables.m1))
    return np.concatenate([[lead], tables.weights_array * y])


def multiple_root_residual(y, x1: complex, tables: CoefficientTables) -> tuple[complex, complex]:
    """Value and z-derivative of the multiple-root equation at x1."""
    coeffs = multiple_root_equation(y, tables)
    return complex(np.polyval(coeffs, x1)), complex(np.polyval(np.polyder(coeffs), x1))


def multiple_root_relative_residual(y, x1: complex, tables: CoefficientTables) -> float:
    """|value| of the multiple-root equation at x1 over the sum of its term magnitudes there."""
    coeffs = multiple_root_equation(y, tables)
    value = np.polyval(coeffs, x1)
    bound = np.polyval(np.abs(coeffs), abs(x1))
    return float(abs(value) / bound) if bound > 0 else 0.0
