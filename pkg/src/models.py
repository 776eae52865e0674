"""Solvable generating models for the first N coefficients, with exact flows and periods.

Each coefficient y_m evolves by its own component law (rate r_m, frequency omega)
unless the model is custom-linear, in which case a user matrix drives all of them.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from src.errors import ConfigError, NoClosedFormError
from src.utils import complex_to_pair, parse_complex, parse_rate

TWO_PI = 2.0 * math.pi

# Component laws
LAW_EXP_VELOCITY = "exp_velocity"  # yddot = i r omega ydot
LAW_HARMONIC = "harmonic"  # yddot = -r^2 omega^2 y
LAW_DAMPED = "damped"  # yddot = -a ydot
LAW_FREE = "free"  # yddot = 0
LAW_ROTATION = "rotation"  # ydot = i r omega y
LAW_FROZEN = "frozen"  # ydot = 0

FIRST_ORDER_LAWS = (LAW_ROTATION, LAW_FROZEN)
SECOND_ORDER_LAWS = (LAW_EXP_VELOCITY, LAW_HARMONIC, LAW_DAMPED, LAW_FREE)
RATED_LAWS = (LAW_EXP_VELOCITY, LAW_HARMONIC, LAW_ROTATION)

# Model kinds
KIND_EXP_VELOCITY = "exp-velocity"
KIND_HARMONIC = "harmonic"
KIND_MIXED = "mixed"
KIND_DAMPED_HARMONIC = "damped-harmonic"
KIND_ROTATION = "rotation"
KIND_CONSTANT = "constant"
KIND_CUSTOM_LINEAR = "custom-linear"
KINDS = (
    KIND_EXP_VELOCITY, KIND_HARMONIC, KIND_MIXED, KIND_DAMPED_HARMONIC,
    KIND_ROTATION, KIND_CONSTANT, KIND_CUSTOM_LINEAR,
)

_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class Component:
    law: str
    rate: Fraction | None = None
    a: float | None = None

    def __post_init__(self):
        if self.law not in FIRST_ORDER_LAWS + SECOND_ORDER_LAWS:
            raise ConfigError(f"unknown component law {self.law!r}")
        if self.law in RATED_LAWS:
            if self.rate is None:
                raise ConfigError(f"{self.law} component needs a rate r")
            object.__setattr__(self, "rate", parse_rate(self.rate))
        if self.law == LAW_DAMPED and (self.a is None or not self.a > 0):
            raise ConfigError("damping a must be > 0")

    @property
    def order(self) -> int:
        return 1 if self.law in FIRST_ORDER_LAWS else 2


class ModelPeriod(NamedTuple):
    period: float
    asymptotic: bool


@dataclass(frozen=True)
class GeneratingModel:
    """Linear solvable evolution ydot = f1(t, y) (order 1) or yddot = f2(t, y, ydot) (order 2)."""

    kind: str
    components: tuple[Component, ...] = ()
    omega: float = TWO_PI
    # custom-linear only
    matrix: np.ndarray | None = field(default=None, compare=False)
    damping: np.ndarray | None = field(default=None, compare=False)
    custom_order: int | None = None
    closed_form: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not np.isfinite(self.omega) or self.omega == 0:
            raise ConfigError("omega must be a nonzero real")
        object.__setattr__(self, "components", tuple(self.components))
        if self.kind == KIND_CUSTOM_LINEAR:
            self._check_custom()
            return
        if len(self.components) < 2:
            raise ConfigError("a generating model needs at least 2 components (N ≥ 2)")
        orders = {c.order for c in self.components}
        if len(orders) != 1:
            raise ConfigError("components mix first- and second-order laws")

    def _check_custom(self):
        if self.custom_order not in (1, 2):
            raise ConfigError("custom-linear models need order 1 or 2")
        if self.matrix is None:
            raise ConfigError("custom-linear models need a matrix")
        M = np.array(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
            raise ConfigError("custom-linear matrix must be square with N ≥ 2")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        if self.damping is not None:
            if self.custom_order != 2:
                raise ConfigError("damping matrix only applies to order-2 custom models")
            D = np.array(self.damping, dtype=complex)
            if D.shape != M.shape:
                raise ConfigError("damping matrix must match the main matrix shape")
            D.setflags(write=False)
            object.__setattr__(self, "damping", D)

    @property
    def order(self) -> int:
        if self.kind == KIND_CUSTOM_LINEAR:
            return int(self.custom_order)
        return self.components[0].order

    @property
    def dimension(self) -> int:
        if self.kind == KIND_CUSTOM_LINEAR:
            return self.matrix.shape[0]
        return len(self.components)

    @property
    def rates(self) -> tuple[Fraction | None, ...]:
        return tuple(c.rate for c in self.components)

    @property
    def decay_rate(self) -> float | None:
        """Smallest damping constant, or None when nothing decays."""
        rates = [c.a for c in self.components if c.law == LAW_DAMPED]
        return min(rates) if rates else None

    def _damping_matrix(self) -> np.ndarray:
        if self.damping is None:
            return np.zeros_like(self.matrix)
        return self.damping


def _check_dim(model: GeneratingModel, v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=complex).ravel()
    if arr.size != model.dimension:
        raise ConfigError(f"{name} has {arr.size} entries, model dimension is {model.dimension}")
    return arr


def model_rhs(model: GeneratingModel, t: float, y, ydot=None) -> np.ndarray:
    """f^{(1)}(t, y) or f^{(2)}(t, y, ydot). Every registered model is autonomous; t is accepted for the interface."""
    y = _check_dim(model, y, "y")
    if model.order == 2:
        if ydot is None:
            raise ConfigError("second-order models need ydot")
        ydot = _check_dim(model, ydot, "ydot")
    if model.kind == KIND_CUSTOM_LINEAR:
        out = model.matrix @ y
        if model.order == 2:
            out = out + model._damping_matrix() @ ydot
        return out

    out = np.zeros(model.dimension, dtype=complex)
    w = model.omega
    for m, c in enumerate(model.components):
        if c.law == LAW_EXP_VELOCITY:
            out[m] = 1j * float(c.rate) * w * ydot[m]
        elif c.law == LAW_HARMONIC:
            out[m] = -(float(c.rate) * w) ** 2 * y[m]
        elif c.law == LAW_DAMPED:
            out[m] = -c.a * ydot[m]
        elif c.law == LAW_ROTATION:
            out[m] = 1j * float(c.rate) * w * y[m]
        # free / frozen: zero
    return out


def _exp_kernel(k: complex, s: float) -> complex:
    """(e^{k s} - 1)/k, series near k s = 0."""
    ks = k * s
    if abs(ks) < _SERIES_CUTOFF:
        return s * (1.0 + ks / 2.0 + ks * ks / 6.0)
    return (np.exp(ks) - 1.0) / k


def _component_flow(c: Component, omega: float, s: float, y0: complex, v0: complex) -> tuple[complex, complex]:
    if c.law == LAW_EXP_VELOCITY:
        k = 1j * float(c.rate) * omega
        return y0 + v0 * _exp_kernel(k, s), v0 * np.exp(k * s)
    if c.law == LAW_HARMONIC:
        k = float(c.rate) * omega
        cs, sn = math.cos(k * s), math.sin(k * s)
        return y0 * cs + v0 * sn / k, -y0 * k * sn + v0 * cs
    if c.law == LAW_DAMPED:
        return y0 + v0 * _exp_kernel(-c.a, s), v0 * math.exp(-c.a * s)
    if c.law == LAW_FREE:
        return y0 + v0 * s, v0
    if c.law == LAW_ROTATION:
        k = 1j * float(c.rate) * omega
        y = y0 * np.exp(k * s)
        return y, k * y
    return y0, 0j  # frozen


def model_flow(model: GeneratingModel, t0: float, t: float, y0, ydot0=None) -> tuple[np.ndarray, np.ndarray]:
    """Exact (y(t), ydot(t)) from (y(t0), ydot(t0)); for order 1, ydot is f^{(1)} at y(t)."""
    y0 = _check_dim(model, y0, "y0")
    if model.order == 2:
        if ydot0 is None:
            raise ConfigError("second-order models need ydot0")
        ydot0 = _check_dim(model, ydot0, "ydot0")
    else:
        ydot0 = np.zeros_like(y0)
    s = float(t) - float(t0)

    if model.kind == KIND_CUSTOM_LINEAR:
        if not model.closed_form:
            raise NoClosedFormError("custom-linear model registered without a closed-form flow")
        N = model.dimension
        if model.order == 1:
            y = expm(model.matrix * s) @ y0
            return y, model.matrix @ y
        block = np.zeros((2 * N, 2 * N), dtype=complex)
        block[:N, N:] = np.eye(N)
        block[N:, :N] = model.matrix
        block[N:, N:] = model._damping_matrix()
        z = expm(block * s) @ np.concatenate([y0, ydot0])
        return z[:N], z[N:]

    y = np.empty(model.dimension, dtype=complex)
    v = np.empty(model.dimension, dtype=complex)
    for m, c in enumerate(model.components):
        y[m], v[m] = _component_flow(c, model.omega, s, y0[m], ydot0[m])
    return y, v


def _fraction_lcm(values: list[Fraction]) -> Fraction:
    """Least positive common multiple of positive rationals: lcm(numerators)/gcd(denominators)."""
    num = math.lcm(*(v.numerator for v in values))
    den = math.gcd(*(v.denominator for v in values))
    return Fraction(num, den)


def model_period(model: GeneratingModel) -> ModelPeriod | None:
    """Common period of the component flows, lcm_m(1/|r_m|)·2π/|omega|; None when not isochronous."""
    if model.kind == KIND_CUSTOM_LINEAR:
        return None
    periods = []
    asymptotic = False
    for c in model.components:
        if c.law in RATED_LAWS:
            periods.append(1 / abs(c.rate))
        elif c.law == LAW_DAMPED:
            asymptotic = True
        elif c.law == LAW_FREE:
            return None
    if not periods:
        return None
    base = _fraction_lcm(periods)
    return ModelPeriod(float(base) * TWO_PI / abs(model.omega), asymptotic)


# --- constructors ---


def _rated(law: str, rates) -> tuple[Component, ...]:
    return tuple(Component(law, rate=parse_rate(r)) for r in rates)


def exp_velocity_model(rates, omega: float = TWO_PI) -> GeneratingModel:
    return GeneratingModel(KIND_EXP_VELOCITY, _rated(LAW_EXP_VELOCITY, rates), omega)


def harmonic_model(rates, omega: float = TWO_PI) -> GeneratingModel:
    return GeneratingModel(KIND_HARMONIC, _rated(LAW_HARMONIC, rates), omega)


def rotation_model(rates, omega: float = TWO_PI) -> GeneratingModel:
    return GeneratingModel(KIND_ROTATION, _rated(LAW_ROTATION, rates), omega)


def constant_model(n_roots: int, order: int = 1) -> GeneratingModel:
    law = LAW_FROZEN if order == 1 else LAW_FREE
    return GeneratingModel(KIND_CONSTANT, tuple(Component(law) for _ in range(n_roots)))


def damped_harmonic_model(rate, a: float, omega: float = TWO_PI) -> GeneratingModel:
    """y1 harmonic with rate r, y2 with yddot = -a ydot."""
    return GeneratingModel(
        KIND_DAMPED_HARMONIC, (Component(LAW_HARMONIC, rate=parse_rate(rate)), Component(LAW_DAMPED, a=float(a))), omega
    )


def mixed_model(components, omega: float = TWO_PI) -> GeneratingModel:
    return GeneratingModel(KIND_MIXED, tuple(components), omega)


def custom_linear(order: int, matrix, damping=None, closed_form: bool = True) -> GeneratingModel:
    """ydot = M y (order 1) or yddot = M y + D ydot (order 2)."""
    return GeneratingModel(
        KIND_CUSTOM_LINEAR, omega=TWO_PI, matrix=matrix, damping=damping, custom_order=order, closed_form=closed_form
    )


def model_3_1_1() -> GeneratingModel:
    return exp_velocity_model(["1/2", "1/3"])


def model_3_1_2() -> GeneratingModel:
    return harmonic_model(["1/3", "1/2"])


def model_3_1_3() -> GeneratingModel:
    return mixed_model([Component(LAW_EXP_VELOCITY, rate=Fraction(1, 3)), Component(LAW_HARMONIC, rate=Fraction(1, 4))])


def model_3_1_4() -> GeneratingModel:
    return damped_harmonic_model("1/3", 0.1)


def model_3_2_1() -> GeneratingModel:
    return exp_velocity_model(["1/2", "1/3", "1/2"])


def model_3_2_2() -> GeneratingModel:
    return harmonic_model(["1/2", "1/3", "1/4"])


# --- JSON documents ---


def _component_to_dict(c: Component) -> dict:
    d = {"law": c.law}
    if c.rate is not None:
        d["r"] = str(c.rate)
    if c.a is not None:
        d["a"] = c.a
    return d


def model_to_dict(model: GeneratingModel) -> dict:
    if model.kind == KIND_CUSTOM_LINEAR:
        d = {
            "kind": model.kind,
            "order": model.order,
            "matrix": [[complex_to_pair(z) for z in row] for row in model.matrix],
            "closed_form": model.closed_form,
        }
        if model.damping is not None:
            d["damping"] = [[complex_to_pair(z) for z in row] for row in model.damping]
        return d
    return {"kind": model.kind, "omega": model.omega, "components": [_component_to_dict(c) for c in model.components]}


def _parse_matrix(rows, name: str) -> np.ndarray:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{name} must be a list of rows")
    return np.array([[parse_complex(v) for v in row] for row in rows], dtype=complex)


def model_from_dict(doc: dict) -> GeneratingModel:
    """Build a model from {"kind", "omega"?, "components" | "r" [, "a"]} or a custom-linear document."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError("model document needs a 'kind'")
    kind = doc["kind"]
    omega = float(doc.get("omega", TWO_PI))
    if kind == KIND_CUSTOM_LINEAR:
        damping = _parse_matrix(doc["damping"], "damping") if doc.get("damping") is not None else None
        return custom_linear(
            int(doc.get("order", 0)), _parse_matrix(doc.get("matrix"), "matrix"), damping,
            closed_form=bool(doc.get("closed_form", True)),
        )
    if "components" in doc:
        comps = []
        for c in doc["components"]:
            if not isinstance(c, dict) or "law" not in c:
                raise ConfigError("each component needs a 'law'")
            comps.append(Component(c["law"], rate=c.get("r"), a=c.get("a")))
        return GeneratingModel(kind, tuple(comps), omega)
    if kind == KIND_EXP_VELOCITY:
        return exp_velocity_model(doc.get("r", []), omega)
    if kind == KIND_HARMONIC:
        return harmonic_model(doc.get("r", []), omega)
    if kind == KIND_ROTATION:
        return rotation_model(doc.get("r", []), omega)
    if kind == KIND_DAMPED_HARMONIC:
        r = doc.get("r")
        r = r[0] if isinstance(r, list) else r
        if r is None or "a" not in doc:
            raise ConfigError("damped-harmonic models need 'r' and 'a'")
        return damped_harmonic_model(r, float(doc["a"]), omega)
    if kind == KIND_CONSTANT:
        return constant_model(int(doc.get("N", 0)), int(doc.get("order", 1)))
    raise ConfigError(f"model kind {kind!r} needs an explicit 'components' list")
