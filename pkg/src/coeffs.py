"""Exact combinatorial constants: binomials, Pochhammer symbols, beta/alpha/gamma/theta/phi tables.

Public docs use the 1-based indices of the formulas (alpha_{nm}, 1 <= m < n <= N);
storage is 0-based: alpha[n-1][m-1].
"""
import math
import time
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from src.errors import ConfigError
from src.log_config import log_tables_built

IntMatrix = tuple[tuple[int, ...], ...]


def binomial(n: int, k: int) -> int:
    """C(n, k), vanishing when k > n or k < 0."""
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


def pochhammer(a: int, m: int) -> int:
    """Rising factorial a(a+1)...(a+m-1); 1 when m = 0."""
    if m < 0:
        raise ValueError(f"pochhammer order must be >= 0, got {m}")
    return math.prod(range(a, a + m))


def _check_dims(n_roots: int, m1: int) -> None:
    if m1 < 1:
        raise ConfigError("m1 must be ≥ 1")
    if n_roots < 2:
        raise ConfigError("N must be ≥ 2")


def beta_table(n_roots: int, m1: int) -> tuple[IntMatrix, ...]:
    """beta[k-1][n-1][m-1] = beta_{nm}^{(k)} for k = 1..N-1.

    beta^{(1)}_{nm} = C(m1, n-m) below the diagonal; higher levels follow
    beta^{(k)}_{nm} = -sum_{j=m+1}^{n+1-k} C(m1, j-m) beta^{(k-1)}_{nj}.
    """
    _check_dims(n_roots, m1)
    N = n_roots
    first = [[binomial(m1, n - m) if m <= n - 1 else 0 for m in range(1, N + 1)] for n in range(1, N + 1)]
    levels = [first]
    for k in range(2, N):
        prev = levels[-1]
        cur = [[0] * N for _ in range(N)]
        for n in range(1, N + 1):
            for m in range(1, N + 1):
                cur[n - 1][m - 1] = -sum(
                    binomial(m1, j - m) * prev[n - 1][j - 1] for j in range(m + 1, n + 2 - k)
                )
        levels.append(cur)
    return tuple(tuple(tuple(row) for row in level) for level in levels)


def alpha_table(n_roots: int, m1: int, beta: tuple[IntMatrix, ...] | None = None) -> IntMatrix:
    """alpha_{nm} = (-1)^{n+m+1} sum_{k=1}^{n-m} beta^{(k)}_{nm}; zero for m >= n."""
    _check_dims(n_roots, m1)
    beta = beta if beta is not None else beta_table(n_roots, m1)
    N = n_roots
    alpha = [[0] * N for _ in range(N)]
    for n in range(1, N + 1):
        for m in range(1, n):
            s = sum(beta[k - 1][n - 1][m - 1] for k in range(1, n - m + 1))
            alpha[n - 1][m - 1] = (-1) ** (n + m + 1) * s
    return tuple(tuple(row) for row in alpha)


def gamma_vector(n_roots: int, m1: int, alpha: IntMatrix | None = None) -> tuple[int, ...]:
    """gamma_n = sum_{j<n} (-1)^j C(m1, j) alpha_{nj} + (-1)^n C(m1, n)."""
    _check_dims(n_roots, m1)
    alpha = alpha if alpha is not None else alpha_table(n_roots, m1)
    out = []
    for n in range(1, n_roots + 1):
        s = sum((-1) ** j * binomial(m1, j) * alpha[n - 1][j - 1] for j in range(1, n))
        out.append(s + (-1) ** n * binomial(m1, n))
    return tuple(out)


def theta_phi_tables(n_roots: int, m1: int, alpha: IntMatrix | None = None) -> tuple[IntMatrix, tuple[int, ...]]:
    """theta[k-1][j-1] (k = 1..m1, j = 1..N-1) and phi[k-1] of the trailing-coefficient formula."""
    _check_dims(n_roots, m1)
    alpha = alpha if alpha is not None else alpha_table(n_roots, m1)
    N = n_roots
    theta = []
    phi = []
    for k in range(1, m1 + 1):
        row = []
        for j in range(1, N):
            v = (-1) ** (N + k + j) * binomial(m1, N + k - j)
            v += sum(
                binomial(m1, N + k - l) * (-1) ** (N + k + l) * alpha[l - 1][j - 1] for l in range(j + 1, N + 1)
            )
            row.append(v)
        theta.append(tuple(row))
        inner = sum(
            binomial(m1, N + k - l)
            * (binomial(m1, l) + sum(binomial(m1, j) * (-1) ** (l + j) * alpha[l - 1][j - 1] for j in range(1, l)))
            for l in range(1, N + 1)
        )
        phi.append((-1) ** (N + k) * (binomial(m1, N + k) - inner))
    return tuple(theta), tuple(phi)


def elem_sym_all(values) -> np.ndarray:
    """[sigma_0, ..., sigma_M] of the given values by one-pass product accumulation."""
    vals = np.asarray(values, dtype=complex).ravel()
    e = np.zeros(vals.size + 1, dtype=complex)
    e[0] = 1.0
    for i, v in enumerate(vals):
        e[1 : i + 2] = e[1 : i + 2] + v * e[0 : i + 1]
    return e


def elem_sym(values, n: int) -> complex:
    """sigma_n over the values; 1 for n = 0, 0 for n > M."""
    if n < 0:
        raise ValueError(f"degree must be >= 0, got {n}")
    e = elem_sym_all(values)
    return complex(e[n]) if n < e.size else 0j


def _to_float(table) -> np.ndarray:
    try:
        return np.array(table, dtype=float)
    except OverflowError as e:
        raise OverflowError("coefficient table entries exceed float range") from e


@dataclass(frozen=True)
class CoefficientTables:
    n_roots: int
    m1: int
    alpha: IntMatrix
    gamma: tuple[int, ...]
    theta: IntMatrix
    phi: tuple[int, ...]

    @property
    def degree(self) -> int:
        return self.n_roots + self.m1

    @cached_property
    def alpha_array(self) -> np.ndarray:
        return _to_float(self.alpha)

    @cached_property
    def gamma_array(self) -> np.ndarray:
        return _to_float(self.gamma)

    @cached_property
    def theta_array(self) -> np.ndarray:
        return _to_float(self.theta).reshape(self.m1, self.n_roots - 1)

    @cached_property
    def phi_array(self) -> np.ndarray:
        return _to_float(self.phi)

    @cached_property
    def weights(self) -> tuple[int, ...]:
        """w_j = (N-j+1)_{m1}, j = 1..N."""
        return tuple(pochhammer(self.n_roots - j + 1, self.m1) for j in range(1, self.n_roots + 1))

    @cached_property
    def weights_array(self) -> np.ndarray:
        return _to_float(self.weights)

    @cached_property
    def factorial(self) -> int:
        """(m1+1)!"""
        return math.factorial(self.m1 + 1)

    @cached_property
    def lag(self) -> np.ndarray:
        """lag[n-1][m-1] = n - m, the x1 exponent of alpha_{nm}."""
        idx = np.arange(1, self.n_roots + 1)
        return idx[:, None] - idx[None, :]

    @cached_property
    def x1_derivative_terms(self) -> tuple[np.ndarray, ...]:
        """Exponents and integer factors of [A^{(N)}]^{-1}(x1), gamma_m x1^m and their first two x1-derivatives.

        (e0, e1, e2, alpha1, alpha2, ew, gamma1, gamma2): entries of the k-th derivative are
        alpha_k * x1^{e_k}; for the gamma vector, m x1^{m-1} gamma_m and m(m-1) x1^{m-2} gamma_m
        use exponents ew - 1 and ew - 2 clipped at 0 (ew = m).
        """
        lag = self.lag
        m = np.arange(1, self.n_roots + 1)
        return (
            np.maximum(lag, 0),
            np.maximum(lag - 1, 0),
            np.maximum(lag - 2, 0),
            self.alpha_array * lag,
            self.alpha_array * lag * (lag - 1),
            m,
            m * self.gamma_array,
            m * (m - 1) * self.gamma_array,
        )


@lru_cache(maxsize=256)
def build_tables(n_roots: int, m1: int) -> CoefficientTables:
    """All tables for (N, m1); built once and cached."""
    _check_dims(n_roots, m1)
    t0 = time.perf_counter()
    beta = beta_table(n_roots, m1)
    alpha = alpha_table(n_roots, m1, beta)
    gamma = gamma_vector(n_roots, m1, alpha)
    theta, phi = theta_phi_tables(n_roots, m1, alpha)
    log_tables_built(n_roots, m1, time.perf_counter() - t0)
    return CoefficientTables(n_roots, m1, alpha, gamma, theta, phi)


def inverse_matrix(x1: complex, tables: CoefficientTables) -> np.ndarray:
    """[A^{(N)}(x1)]^{-1} = delta + alpha * x1^{n-m}."""
    lag = tables.lag
    powers = np.power(complex(x1), np.maximum(lag, 0))
    return np.eye(tables.n_roots, dtype=complex) + tables.alpha_array * powers


def design_matrix(x1: complex, tables: CoefficientTables) -> tuple[np.ndarray, np.ndarray]:
    """A(x1) ((N+m1) x N) and a(x1) of the system y = A xi + a."""
    N, m1 = tables.n_roots, tables.m1
    x1 = complex(x1)
    A = np.zeros((N + m1, N), dtype=complex)
    for n in range(1, N + m1 + 1):
        for j in range(1, min(n, N) + 1):
            if j == n:
                A[n - 1, j - 1] = 1.0
            else:
                A[n - 1, j - 1] = binomial(m1, n - j) * (-1) ** (n + j) * x1 ** (n - j)
    a = np.array([(-1) ** n * binomial(m1, n) * x1**n for n in range(1, N + m1 + 1)], dtype=complex)
    return A, a


def tables_to_dict(tables: CoefficientTables) -> dict:
    """JSON-ready tables with exact integers as decimal strings."""

    def enc(rows):
        return [[str(v) for v in row] for row in rows]

    return {
        "N": tables.n_roots,
        "m1": tables.m1,
        "alpha": enc(tables.alpha),
        "gamma": [str(v) for v in tables.gamma],
        "theta": enc(tables.theta),
        "phi": [str(v) for v in tables.phi],
        "index_base": "alpha[n-1][m-1] holds alpha_{nm}",
    }
