"""Generating models: right-hand sides, exact flows, periods, documents."""
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.errors import ConfigError, NoClosedFormError
from src.models import (
    KIND_CUSTOM_LINEAR,
    LAW_DAMPED,
    LAW_HARMONIC,
    Component,
    GeneratingModel,
    constant_model,
    custom_linear,
    exp_velocity_model,
    harmonic_model,
    model_3_1_1,
    model_3_1_2,
    model_3_1_3,
    model_3_1_4,
    model_3_2_1,
    model_3_2_2,
    model_flow,
    model_from_dict,
    model_period,
    model_rhs,
    model_to_dict,
    rotation_model,
)

SECOND_ORDER = [model_3_1_1, model_3_1_2, model_3_1_3, model_3_1_4, model_3_2_1, model_3_2_2]


def _state(n, seed=3):
    rng = np.random.default_rng(seed)
    return (
        rng.normal(size=n) + 1j * rng.normal(size=n),
        rng.normal(size=n) + 1j * rng.normal(size=n),
    )


def test_exp_velocity_rhs():
    f = model_rhs(model_3_1_1(), 0.0, [0, 0], [1, 1])
    np.testing.assert_allclose(f, [1j * math.pi, 2j * math.pi / 3])


def test_harmonic_rhs():
    f = model_rhs(model_3_1_2(), 0.0, [1, 0], [0, 0])
    np.testing.assert_allclose(f, [-((2 * math.pi / 3) ** 2), 0], atol=1e-15)


def test_damped_rhs():
    f = model_rhs(model_3_1_4(), 0.0, [0, 0], [0, 1])
    np.testing.assert_allclose(f, [0, -0.1])


def test_rhs_dimension_and_order_checks():
    with pytest.raises(ConfigError):
        model_rhs(model_3_1_1(), 0.0, [0, 0, 0], [1, 1, 1])
    with pytest.raises(ConfigError, match="ydot"):
        model_rhs(model_3_1_1(), 0.0, [0, 0])


@pytest.mark.parametrize("make", SECOND_ORDER)
def test_flow_at_start_is_identity(make):
    model = make()
    y0, v0 = _state(model.dimension)
    y, v = model_flow(model, 0.3, 0.3, y0, v0)
    np.testing.assert_allclose(y, y0)
    np.testing.assert_allclose(v, v0)


@pytest.mark.parametrize("make", SECOND_ORDER)
def test_flow_satisfies_model_equation(make):
    model = make()
    y0, v0 = _state(model.dimension)
    t, h = 0.7, 1e-4
    yp, _ = model_flow(model, 0.0, t + h, y0, v0)
    ym, _ = model_flow(model, 0.0, t - h, y0, v0)
    y, v = model_flow(model, 0.0, t, y0, v0)
    np.testing.assert_allclose((yp - ym) / (2 * h), v, atol=1e-6)
    np.testing.assert_allclose((yp - 2 * y + ym) / h**2, model_rhs(model, t, y, v), atol=1e-3)


@pytest.mark.parametrize("make", SECOND_ORDER)
def test_flow_group_property(make):
    model = make()
    y0, v0 = _state(model.dimension)
    y1, v1 = model_flow(model, 0.0, 1.3, y0, v0)
    y2, v2 = model_flow(model, 1.3, 2.9, y1, v1)
    y3, v3 = model_flow(model, 0.0, 2.9, y0, v0)
    np.testing.assert_allclose(y2, y3, atol=1e-12)
    np.testing.assert_allclose(v2, v3, atol=1e-12)


@pytest.mark.parametrize("make", [model_3_1_1, model_3_1_2, model_3_1_3, model_3_2_1, model_3_2_2])
def test_flow_returns_after_model_period(make):
    model = make()
    y0, v0 = _state(model.dimension)
    y, v = model_flow(model, 0.0, model_period(model).period, y0, v0)
    np.testing.assert_allclose(y, y0, atol=1e-10)
    np.testing.assert_allclose(v, v0, atol=1e-10)


def test_damped_component_settles():
    y0, v0 = [1.0, 2.0], [0.0, 1.0]
    y, v = model_flow(model_3_1_4(), 0.0, 500.0, y0, v0)
    assert y[1] == pytest.approx(2.0 + 1.0 / 0.1, abs=1e-9)
    assert abs(v[1]) < 1e-20


def test_first_order_flow_reports_model_velocity():
    model = rotation_model(["1/2", "1"])
    y, v = model_flow(model, 0.0, 0.25, [1.0, 2.0])
    np.testing.assert_allclose(y, [np.exp(1j * math.pi / 4), 2 * np.exp(1j * math.pi / 2)])
    np.testing.assert_allclose(v, model_rhs(model, 0.25, y))


def test_series_kernel_for_tiny_rates():
    model = exp_velocity_model(["1/1000000000", "1"])
    y, _ = model_flow(model, 0.0, 1.0, [0.0, 0.0], [1.0, 0.0])
    assert y[0] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize(
    "make,expected",
    [
        (model_3_1_1, 6.0),
        (model_3_1_2, 6.0),
        (model_3_1_3, 12.0),
        (model_3_2_1, 6.0),
        (model_3_2_2, 12.0),
    ],
)
def test_model_periods(make, expected):
    period = model_period(make())
    assert period.period == pytest.approx(expected)
    assert not period.asymptotic


def test_damped_model_period_is_asymptotic():
    assert model_period(model_3_1_4()) == (pytest.approx(3.0), True)


def test_periods_scale_with_omega():
    assert model_period(harmonic_model(["1/2", "1/3"], omega=math.pi)).period == pytest.approx(12.0)
    assert model_period(rotation_model(["1/2", "1", "3/2"])).period == pytest.approx(2.0)


def test_models_without_period():
    assert model_period(constant_model(2, order=2)) is None
    assert model_period(constant_model(3, order=1)) is None
    assert model_period(custom_linear(1, np.eye(2))) is None


def test_validation_errors():
    with pytest.raises(ConfigError, match="at least 2"):
        exp_velocity_model(["1/2"])
    with pytest.raises(ConfigError, match="mix"):
        GeneratingModel("mixed", (Component("rotation", rate=1), Component(LAW_HARMONIC, rate=1)))
    with pytest.raises(ConfigError, match="omega"):
        harmonic_model(["1", "2"], omega=0.0)
    with pytest.raises(ConfigError, match="unknown component law"):
        Component("spiral", rate=1)
    with pytest.raises(ConfigError, match="needs a rate"):
        Component(LAW_HARMONIC)
    with pytest.raises(ConfigError, match="damping"):
        Component(LAW_DAMPED, a=0.0)
    with pytest.raises(ConfigError, match="rate"):
        exp_velocity_model(["0", "1"])
    with pytest.raises(ConfigError, match="unknown model kind"):
        GeneratingModel("chaotic")


def test_custom_linear_validation():
    with pytest.raises(ConfigError, match="order"):
        custom_linear(3, np.eye(2))
    with pytest.raises(ConfigError, match="square"):
        custom_linear(1, np.ones((2, 3)))
    with pytest.raises(ConfigError, match="damping"):
        custom_linear(1, np.eye(2), damping=np.eye(2))


def test_custom_linear_matches_rotation():
    omega = 2 * math.pi
    rates = [0.5, 1.0, 1.5]
    custom = custom_linear(1, np.diag([1j * r * omega for r in rates]))
    rot = rotation_model(["1/2", "1", "3/2"])
    y0 = np.array([1.0, 0.5j, -2.0])
    np.testing.assert_allclose(model_rhs(custom, 0.0, y0), model_rhs(rot, 0.0, y0))
    np.testing.assert_allclose(model_flow(custom, 0.0, 0.37, y0)[0], model_flow(rot, 0.0, 0.37, y0)[0], atol=1e-12)


def test_custom_second_order_matches_harmonic():
    custom = custom_linear(2, np.diag([-((2 * math.pi / 3) ** 2), -(math.pi**2)]))
    y0, v0 = _state(2)
    y_c, v_c = model_flow(custom, 0.0, 1.1, y0, v0)
    y_h, v_h = model_flow(model_3_1_2(), 0.0, 1.1, y0, v0)
    np.testing.assert_allclose(y_c, y_h, atol=1e-10)
    np.testing.assert_allclose(v_c, v_h, atol=1e-10)


def test_custom_without_closed_form_refuses_flow():
    model = custom_linear(2, -np.eye(2), closed_form=False)
    with pytest.raises(NoClosedFormError):
        model_flow(model, 0.0, 1.0, [1, 0], [0, 1])
    np.testing.assert_allclose(model_rhs(model, 0.0, [1, 2], [0, 0]), [-1, -2])


@pytest.mark.parametrize("make", SECOND_ORDER)
def test_document_round_trip(make):
    model = make()
    again = model_from_dict(model_to_dict(model))
    assert again == model
    assert model_period(again) == model_period(model)


def test_document_shorthand_and_custom():
    model = model_from_dict({"kind": "harmonic", "r": ["1/3", "1/2"]})
    assert model == model_3_1_2()
    assert model.rates == (Fraction(1, 3), Fraction(1, 2))
    damped = model_from_dict({"kind": "damped-harmonic", "r": "1/3", "a": 0.1})
    assert damped == model_3_1_4()
    doc = {"kind": KIND_CUSTOM_LINEAR, "order": 1, "matrix": [[[0, 1], 0], [0, "-1"]]}
    custom = model_from_dict(doc)
    np.testing.assert_allclose(custom.matrix, [[1j, 0], [0, -1]])
    assert model_to_dict(custom)["matrix"][0][0] == [0.0, 1.0]


def test_document_errors():
    with pytest.raises(ConfigError, match="kind"):
        model_from_dict({"r": ["1"]})
    with pytest.raises(ConfigError, match="law"):
        model_from_dict({"kind": "mixed", "components": [{"r": "1"}]})
    with pytest.raises(ConfigError, match="components"):
        model_from_dict({"kind": "mixed"})
