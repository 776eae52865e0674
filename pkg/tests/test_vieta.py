"""Root/coefficient maps and the multiple-root relations."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.coeffs import build_tables
from src.config import SolverSettings
from src.state import RootState
from src.tracking import deflate, roots_of, track_assignment, track_multiple_root
from src.vieta import (
    assemble_polynomial,
    coeff_derivs_from_roots,
    coeff_second_derivs_from_roots,
    coeffs_from_roots,
    extend_y,
    multiple_root_equation,
    multiple_root_relative_residual,
    multiple_root_residual,
    redundant_rows_residual,
    scale,
    xi_from_roots,
    xi_from_y,
)


def _random_state(rng, n_roots, m1, with_velocity=True):
    # roots spread on a circle so gaps stay O(1)
    angles = 2 * np.pi * np.arange(n_roots) / n_roots
    x = 2.0 * np.exp(1j * angles) + 0.3 * (rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots))
    v = rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots) if with_velocity else None
    return RootState(x, m1, v)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(1234)


def test_coeffs_from_roots_small_case():
    # (z - 0)^2 (z - 3) = z^3 - 3 z^2
    y = coeffs_from_roots(RootState([0.0, 3.0], 1))
    np.testing.assert_allclose(y, [-3.0, 0.0, 0.0], atol=1e-15)


def test_coeffs_match_numpy_poly(rng):
    state = _random_state(rng, 3, 4, with_velocity=False)
    multiset = np.concatenate([np.full(4, state.x[0]), state.x])
    np.testing.assert_allclose(coeffs_from_roots(state), np.poly(multiset)[1:], rtol=1e-12, atol=1e-12)


def test_coeff_derivs_on_linear_path():
    # x1(t) = t, x2 = 3 at t = 0
    ydot = coeff_derivs_from_roots(RootState([0.0, 3.0], 1, [1.0, 0.0]))
    np.testing.assert_allclose(ydot, [-2.0, 6.0], atol=1e-14)


def test_coeff_second_derivs_on_quadratic_path():
    # x1(t) = t^2, x2 = 3 at t = 1: y1 = -(3 + 2 x1), y2 = 6 x1 + x1^2
    state = RootState([1.0, 3.0], 1, [2.0, 0.0])
    yddot = coeff_second_derivs_from_roots(state, [2.0, 0.0])
    np.testing.assert_allclose(yddot, [-4.0, 24.0], atol=1e-13)


def test_coeff_derivs_match_finite_differences(rng):
    for n_roots, m1 in [(2, 1), (3, 2), (4, 5)]:
        state = _random_state(rng, n_roots, m1)
        acc = rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots)
        h = 1e-5

        def y_at(s):
            x = state.x + s * state.xdot + 0.5 * s * s * acc
            return coeffs_from_roots(RootState(x, m1))[:n_roots]

        fd1 = (y_at(h) - y_at(-h)) / (2 * h)
        fd2 = (y_at(h) - 2 * y_at(0.0) + y_at(-h)) / h**2
        ref = scale(state.x, m1)
        np.testing.assert_allclose(coeff_derivs_from_roots(state), fd1, atol=1e-7 * ref)
        np.testing.assert_allclose(coeff_second_derivs_from_roots(state, acc), fd2, atol=1e-3 * ref)


def test_xi_from_y_recovers_simple_polynomial(rng):
    for n_roots, m1 in [(2, 1), (3, 5), (5, 3)]:
        state = _random_state(rng, n_roots, m1, with_velocity=False)
        tables = build_tables(n_roots, m1)
        y = coeffs_from_roots(state)
        np.testing.assert_allclose(
            xi_from_y(y, state.x[0], tables), xi_from_roots(state.x), atol=1e-9 * scale(state.x, m1)
        )


def test_extend_y_reproduces_trailing_coefficients(rng):
    for n_roots, m1 in [(2, 1), (2, 17), (3, 5), (4, 6)]:
        state = _random_state(rng, n_roots, m1, with_velocity=False)
        tables = build_tables(n_roots, m1)
        y = coeffs_from_roots(state)
        np.testing.assert_allclose(
            extend_y(y[:n_roots], state.x[0], tables), y[n_roots:], atol=1e-9 * scale(state.x, m1)
        )


def test_redundant_rows_vanish_on_consistent_coefficients(rng):
    state = _random_state(rng, 3, 4, with_velocity=False)
    tables = build_tables(3, 4)
    y_full = coeffs_from_roots(state)
    ref = scale(state.x, 4)
    assert np.max(np.abs(redundant_rows_residual(y_full, state.x[0], tables))) < 1e-10 * ref
    bumped = y_full.copy()
    bumped[-1] += 1e-3 * ref
    assert np.max(np.abs(redundant_rows_residual(bumped, state.x[0], tables))) > 1e-4 * ref


def test_multiple_root_equation_has_x1_as_root(rng):
    state = _random_state(rng, 3, 2, with_velocity=False)
    tables = build_tables(3, 2)
    y = coeffs_from_roots(state)[:3]
    coeffs = multiple_root_equation(y, tables)
    assert coeffs.size == 4
    value, deriv = multiple_root_residual(y, state.x[0], tables)
    assert abs(value) < 1e-10 * scale(state.x, 2) * abs(coeffs[0])
    assert abs(deriv) > 0
    other, _ = multiple_root_residual(y, state.x[1], tables)
    assert abs(other) > 1e-6


@pytest.mark.parametrize("m1", [2, 17])
def test_relative_residual_does_not_shrink_with_multiplicity(rng, m1):
    state = _random_state(rng, 2, m1, with_velocity=False)
    tables = build_tables(2, m1)
    y = coeffs_from_roots(state)[:2]
    assert multiple_root_relative_residual(y, state.x[0], tables) < 1e-12
    assert multiple_root_relative_residual(y, state.x[0] + 1e-2, tables) > 1e-8


def _separated_roots(rng, n_roots, min_separation=0.5):
    while True:
        x = _random_state(rng, n_roots, 1, with_velocity=False).x
        d = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() >= min_separation:
            return x


def test_roots_survive_coefficients_and_deflation(rng):
    settings = SolverSettings()
    for _ in range(200):
        n_roots = int(rng.integers(2, 7))
        m1 = int(rng.integers(1, 10))
        x = _separated_roots(rng, n_roots)
        tables = build_tables(n_roots, m1)
        y_full = coeffs_from_roots(RootState(x, m1))
        ref = 1.0 + np.max(np.abs(x))

        x1 = track_multiple_root(y_full[:n_roots], x[0] + 1e-3, tables, settings)
        assert abs(x1 - x[0]) < 1e-6 * ref

        quotient, remainders = deflate(assemble_polynomial(y_full), x1, m1 + 1)
        assert quotient.size == n_roots
        assert np.max(np.abs(remainders)) < 1e-8 * scale(x, m1)
        others = roots_of(quotient)
        match = track_assignment(x[1:], others)
        np.testing.assert_allclose(others[match.permutation], x[1:], atol=1e-6 * ref)


def test_assembled_polynomial_vanishes_at_all_roots(rng):
    state = _random_state(rng, 3, 3, with_velocity=False)
    tables = build_tables(3, 3)
    y = coeffs_from_roots(state)[:3]
    poly = assemble_polynomial(np.concatenate([y, extend_y(y, state.x[0], tables)]))
    assert poly.size == 3 + 3 + 1
    for root in state.x:
        assert abs(np.polyval(poly, root)) < 1e-9 * scale(state.x, 3)


def test_scale():
    assert scale([0.5, 0.1j], 2) == 1.0
    assert scale([2.0, 1.0], 1) == 8.0
