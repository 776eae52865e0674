"""Right-hand sides of the root systems against analytic and finite-difference oracles."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.coeffs import build_tables
from src.config import SolverSettings
from src.dynamics import (
    FirstOrderRHS,
    SecondOrderRHS,
    first_order_field,
    h_first,
    _cross_products,
    h_second,
    pair_products,
    remark_identity_first,
    remark_identity_second,
    second_order_field,
    simple_root_velocity,
    three_body_rhs,
    two_body_rhs,
    x1_ddot,
    x1_dot,
    xi_dot,
)
from src.errors import CollisionError, ConfigError
from src.models import constant_model, exp_velocity_model, model_3_1_2, rotation_model
from src.state import RootState
from src.tracking import newton_polish
from src.vieta import (
    coeff_derivs_from_roots,
    coeff_second_derivs_from_roots,
    coeffs_from_roots,
    multiple_root_equation,
    scale,
    xi_from_roots,
)


def _random(rng, n_roots):
    angles = 2 * np.pi * np.arange(n_roots) / n_roots
    x = 2.0 * np.exp(1j * angles) + 0.3 * (rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots))
    v = rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots)
    a = rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots)
    return x, v, a


def _jets(x, v, a, m1):
    state = RootState(x, m1, v)
    n_roots = len(x)
    return (
        coeffs_from_roots(state)[:n_roots],
        coeff_derivs_from_roots(state),
        coeff_second_derivs_from_roots(state, a),
    )


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(2024)


def test_x1_dot_linear_path():
    tables = build_tables(2, 1)
    assert x1_dot([0.0, 3.0], [-2.0, 6.0], tables) == pytest.approx(1.0)


def test_x1_dot_zero_forcing():
    tables = build_tables(3, 2)
    assert x1_dot([0.0, 3.0, 1j], np.zeros(3), tables) == 0


def test_x1_ddot_quadratic_path():
    # x1(t) = t^2, x2 = 3 at t = 1
    tables = build_tables(2, 1)
    assert x1_ddot([1.0, 3.0], [2.0, 0.0], [-4.0, 24.0], tables) == pytest.approx(2.0)


def test_x1_ddot_cancellation():
    # the drive term cancels the velocity term
    tables = build_tables(2, 1)
    x, v = np.array([1.0, 3.0]), np.array([2.0, 0.5])
    velocity_term = v[0] * (1 * v[0] + 2 * v[1]) / (x[0] - x[1])
    # drive = -(2 x1 yddot1 + yddot2) / (2 (x1 - x2)); pick yddot1 = 0
    yddot = np.array([0.0, 2 * (x[0] - x[1]) * velocity_term])
    assert abs(x1_ddot(x, v, yddot, tables)) < 1e-12


def test_x1_dot_matches_implicit_differentiation(rng):
    n_roots, m1 = 3, 2
    tables = build_tables(n_roots, m1)
    x, _, _ = _random(rng, n_roots)
    y = coeffs_from_roots(RootState(x, m1))[:n_roots]
    ydot = rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots)
    h = 1e-6

    def tracked(s):
        root, ok = newton_polish(multiple_root_equation(y + s * ydot, tables), x[0], 50, 1e-14)
        assert ok
        return root

    fd = (tracked(h) - tracked(-h)) / (2 * h)
    assert x1_dot(x, ydot, tables) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_first_order_field_reproduces_root_velocities(rng):
    for _ in range(200):
        n_roots = int(rng.integers(2, 5))
        m1 = int(rng.integers(1, 7))
        x, v, a = _random(rng, n_roots)
        y, ydot, _ = _jets(x, v, a, m1)
        h = first_order_field(x, y, ydot, build_tables(n_roots, m1))
        np.testing.assert_allclose(h, v, rtol=0, atol=1e-6 * (1 + np.max(np.abs(v))))


def test_second_order_field_reproduces_root_accelerations(rng):
    for _ in range(200):
        n_roots = int(rng.integers(2, 5))
        m1 = int(rng.integers(1, 7))
        x, v, a = _random(rng, n_roots)
        y, ydot, yddot = _jets(x, v, a, m1)
        h = second_order_field(x, v, y, ydot, yddot, build_tables(n_roots, m1))
        np.testing.assert_allclose(h, a, rtol=0, atol=1e-6 * (1 + np.max(np.abs(a))))


def test_h_functions_index_the_fields(rng):
    x, v, a = _random(rng, 3)
    y, ydot, yddot = _jets(x, v, a, 4)
    tables = build_tables(3, 4)
    assert h_first(1, x, y, ydot, tables) == pytest.approx(x1_dot(x, ydot, tables))
    assert h_first(3, x, y, ydot, tables) == pytest.approx(first_order_field(x, y, ydot, tables)[2])
    assert h_second(1, x, v, y, ydot, yddot, tables) == pytest.approx(x1_ddot(x, v, yddot, tables))
    assert h_second(2, x, v, y, ydot, yddot, tables) == pytest.approx(
        second_order_field(x, v, y, ydot, yddot, tables)[1]
    )
    with pytest.raises(IndexError):
        h_first(4, x, y, ydot, tables)


def test_zero_derivatives_give_zero_fields(rng):
    x, _, _ = _random(rng, 3)
    tables = build_tables(3, 2)
    y = coeffs_from_roots(RootState(x, 2))[:3]
    zero = np.zeros(3, dtype=complex)
    assert np.all(first_order_field(x, y, zero, tables) == 0)
    assert np.all(np.abs(second_order_field(x, zero, y, zero, zero, tables)) == 0)


def test_simple_root_velocity_backbone(rng):
    # for an ordinary monic polynomial, xdot_n = -P_n^{-1} sum_m x_n^{N-m} xidot_m
    x, v, _ = _random(rng, 4)
    h = 1e-6
    xidot = (xi_from_roots(x + h * v) - xi_from_roots(x - h * v)) / (2 * h)
    np.testing.assert_allclose(simple_root_velocity(x, xidot), v, atol=1e-6)


def test_xi_dot_matches_simple_polynomial_rate(rng):
    x, v, a = _random(rng, 3)
    y, ydot, _ = _jets(x, v, a, 3)
    tables = build_tables(3, 3)
    h = 1e-6
    fd = (xi_from_roots(x + h * v) - xi_from_roots(x - h * v)) / (2 * h)
    np.testing.assert_allclose(xi_dot(x, y, ydot, tables), fd, atol=1e-6 * scale(x, 3))


def test_generic_second_order_matches_two_body_closed_form(rng):
    for _ in range(100):
        m1 = int(rng.integers(1, 18))
        x, v, _ = _random(rng, 2)
        f = rng.normal(size=2) + 1j * rng.normal(size=2)
        y, ydot, _ = _jets(x, v, np.zeros(2), m1)
        generic = second_order_field(x, v, y, ydot, f, build_tables(2, m1))
        special = np.array(two_body_rhs(x, v, f, m1))
        np.testing.assert_allclose(generic, special, rtol=1e-9, atol=1e-9 * np.max(np.abs(special)))


def test_generic_second_order_matches_three_body_closed_form(rng):
    for _ in range(100):
        m1 = int(rng.integers(1, 10))
        x, v, _ = _random(rng, 3)
        f = rng.normal(size=3) + 1j * rng.normal(size=3)
        y, ydot, _ = _jets(x, v, np.zeros(3), m1)
        generic = second_order_field(x, v, y, ydot, f, build_tables(3, m1))
        special = np.array(three_body_rhs(x, v, f, m1))
        np.testing.assert_allclose(generic, special, rtol=1e-9, atol=1e-9 * np.max(np.abs(special)))


def test_two_body_cancellation():
    # f = 0 and m1 xdot1 + 2 xdot2 = 0
    a1, _ = two_body_rhs([1.0, -1.0], [2.0, -3.0], [0.0, 0.0], 3)
    assert a1 == 0


def test_three_body_static_and_swap_symmetry(rng):
    assert three_body_rhs([1.0, 2j, -1.5], np.zeros(3), np.zeros(3), 4) == (0, 0, 0)
    x, v, _ = _random(rng, 3)
    f = rng.normal(size=3) + 1j * rng.normal(size=3)
    a1, a2, a3 = three_body_rhs(x, v, f, 5)
    b1, b2, b3 = three_body_rhs(x[[0, 2, 1]], v[[0, 2, 1]], f, 5)
    assert b1 == pytest.approx(a1)
    assert b2 == pytest.approx(a3)
    assert b3 == pytest.approx(a2)


def test_equal_rate_velocity_rotation_is_goldfish_plus_linear_term(rng):
    # yddot = i r omega ydot for both coefficients: xddot = goldfish coupling + i r omega xdot
    model = exp_velocity_model(["1/3", "1/3"])
    kappa = 1j * model.omega / 3
    for m1 in (1, 4, 11):
        x, v, _ = _random(rng, 2)
        y, ydot, _ = _jets(x, v, np.zeros(2), m1)
        acc = np.array(two_body_rhs(x, v, kappa * ydot, m1))
        bracket = v[0] * (m1 * v[0] + 2 * v[1]) / (x[0] - x[1])
        np.testing.assert_allclose(acc, [bracket + kappa * v[0], -(m1 + 1) * bracket + kappa * v[1]], rtol=1e-9)


def test_remark_identities_vanish_on_consistent_states(rng):
    for _ in range(200):
        n_roots = int(rng.integers(2, 5))
        m1 = int(rng.integers(1, 7))
        x, v, a = _random(rng, n_roots)
        y, ydot, yddot = _jets(x, v, a, m1)
        tables = build_tables(n_roots, m1)
        ref = scale(x, m1)
        assert abs(remark_identity_first(x, v, y, ydot, tables)) < 1e-9 * ref
        assert abs(remark_identity_second(x, v, y, ydot, yddot, tables)) < 1e-9 * ref


def test_remark_identities_zero_and_negative_control(rng):
    x, v, a = _random(rng, 3)
    tables = build_tables(3, 2)
    y, ydot, yddot = _jets(x, v, a, 2)
    zero = np.zeros(3)
    assert remark_identity_first(x, zero, y, zero, tables) == 0
    assert abs(remark_identity_second(x, zero, y, zero, zero, tables)) == 0
    bad = ydot + np.array([0.5, -0.25j, 0.1])
    assert abs(remark_identity_first(x, v, y, bad, tables)) > 1e-6
    assert abs(remark_identity_second(x, v, y, bad, yddot, tables)) > 1e-6


def test_collision_raises(rng):
    tables = build_tables(2, 2)
    with pytest.raises(CollisionError):
        x1_dot([1.0, 1.0 + 1e-12], [1.0, 1.0], tables)
    x = [0.0, 1.0, 1.0 + 1e-13]
    y = coeffs_from_roots(RootState([0.0, 1.0, 2.0], 1))[:3]
    with pytest.raises(CollisionError) as exc:
        first_order_field(x, y, np.ones(3), build_tables(3, 1))
    assert exc.value.pair == (1, 2)


def test_log_accumulated_products_agree(rng):
    x, v, a = _random(rng, 4)
    y, ydot, yddot = _jets(x, v, a, 3)
    tables = build_tables(4, 3)
    plain = second_order_field(x, v, y, ydot, yddot, tables)
    logged = second_order_field(x, v, y, ydot, yddot, tables, SolverSettings(log_products_threshold=1))
    np.testing.assert_allclose(logged, plain, rtol=1e-10)


@pytest.mark.parametrize("use_log", [False, True])
def test_pair_and_cross_products_match_explicit_loops(rng, use_log):
    x, _, _ = _random(rng, 5)
    pairs = [np.prod([x[n] - x[l] for l in range(5) if l != n]) for n in range(5)]
    cross = [np.prod([(x[n] - x[l]) * (x[0] - x[l]) for l in range(1, 5) if l != n]) for n in range(1, 5)]
    np.testing.assert_allclose(pair_products(x, use_log), pairs, rtol=1e-12)
    np.testing.assert_allclose(_cross_products(x, use_log), cross, rtol=1e-12)


def test_rhs_objects():
    with pytest.raises(ValueError):
        FirstOrderRHS(model_3_1_2(), 2)
    with pytest.raises(ValueError):
        SecondOrderRHS(rotation_model(["1", "1/2"]), 2)
    frozen = FirstOrderRHS(constant_model(3, order=1), 2)
    assert np.all(frozen(0.0, [1.0, -1.0, 2j]) == 0)
    free = SecondOrderRHS(constant_model(2, order=2), 1)
    assert np.all(free(0.0, [1.0, -1.0], [0.0, 0.0]) == 0)
    with pytest.raises(ConfigError):
        FirstOrderRHS(constant_model(3, order=1), 0)


def test_first_order_rhs_for_scaling_rotation():
    # rates r_m = m/2 rotate every root rigidly: xdot = i pi x
    rhs = FirstOrderRHS(rotation_model(["1/2", "1", "3/2"]), 2)
    x = np.array([0.5, 1.5 + 0.2j, -1.5 + 0.4j])
    np.testing.assert_allclose(rhs(0.0, x), 1j * np.pi * x, rtol=1e-10)
