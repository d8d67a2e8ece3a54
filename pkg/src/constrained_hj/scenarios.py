"""Built-in initial data, models and the scenario registry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .model import (
    BirthRate,
    DeathRate,
    GaussianKernel,
    KernelModel,
    ModelSpec,
    QuadraticModel,
    TabulatedConvex,
    TabulatedModel,
    TraitRate,
    load_table,
)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticWell:
    center: float = 0.0
    offset: float = 0.0

    def __call__(self, x):
        return (np.asarray(x, dtype=float) - self.center) ** 2 + self.offset


@dataclass(frozen=True)
class DoubleWell:
    """``min((x + s)^2, (x - s)^2 + right_height)``."""

    separation: float = 1.0
    right_height: float = 0.2
    offset: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = self.separation
        return np.minimum((x + s) ** 2, (x - s) ** 2 + self.right_height) + self.offset


@dataclass(frozen=True)
class SoftWell:
    """``sqrt(1 + (x - c)^2) - 1``: coercive with linear growth."""

    center: float = 0.0
    offset: float = 0.0

    def __call__(self, x):
        return np.sqrt(1.0 + (np.asarray(x, dtype=float) - self.center) ** 2) - 1.0 + self.offset


class TabulatedData:
    """Piecewise-linear initial data from a table, extended linearly beyond its ends."""

    def __init__(self, x: np.ndarray, values: np.ndarray, offset: float = 0.0):
        self.x = np.asarray(x, dtype=float)
        self.values = np.asarray(values, dtype=float) + offset
        self.left_slope = (self.values[1] - self.values[0]) / (self.x[1] - self.x[0])
        self.right_slope = (self.values[-1] - self.values[-2]) / (self.x[-1] - self.x[-2])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x, self.values)
        out = np.where(x < self.x[0], self.values[0] + self.left_slope * (x - self.x[0]), out)
        return np.where(x > self.x[-1], self.values[-1] + self.right_slope * (x - self.x[-1]), out)


@dataclass(frozen=True)
class Shifted:
    """``g - shift``; records the additive normalisation applied to the data."""

    base: Callable
    shift: float

    def __call__(self, x):
        return self.base(x) - self.shift


G_KINDS = ("quadratic-well", "shifted-well", "double-well", "soft-well", "tabulated")


def build_g(spec: dict) -> Callable:
    kind = spec["kind"]
    offset = float(spec.get("offset", 0.0))
    if kind == "quadratic-well":
        return QuadraticWell(0.0, offset)
    if kind == "shifted-well":
        return QuadraticWell(float(spec.get("center", 0.0)), offset)
    if kind == "double-well":
        return DoubleWell(float(spec.get("separation", 1.0)), float(spec.get("right_height", 0.2)), offset)
    if kind == "soft-well":
        return SoftWell(float(spec.get("center", 0.0)), offset)
    if kind == "tabulated":
        if "path" not in spec:
            raise ConfigurationError("tabulated initial data needs a path", key="g.path")
        return TabulatedData(*load_table(spec["path"]), offset=offset)
    raise ConfigurationError(f"unknown initial data {kind!r}; expected one of {G_KINDS}", key="g.kind")


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

MODEL_KINDS = ("quadratic", "kernel", "custom-tabulated")


@dataclass(frozen=True)
class PowerTheta:
    coef: float
    power: float

    def __call__(self, r):
        return self.coef * np.abs(np.asarray(r, dtype=float)) ** self.power


def build_model(spec: dict) -> ModelSpec:
    kind = spec["kind"]
    if kind == "quadratic":
        return QuadraticModel(rate=TraitRate(**spec.get("rate", {})))
    if kind == "kernel":
        return KernelModel(birth=BirthRate(**spec.get("birth", {})), death=DeathRate(**spec.get("death", {})),
                           kernel=GaussianKernel(float(spec.get("sigma", 1.0))))
    if kind == "custom-tabulated":
        for key in ("table", "theta", "c_theta"):
            if key not in spec:
                raise ConfigurationError("custom-tabulated models must supply table, theta and c_theta",
                                         key=f"model.{key}")
        theta = spec["theta"]
        if float(theta.get("power", 2.0)) <= 1.0:
            raise ConfigurationError("Theta must be super-linear (power > 1)", key="model.theta.power")
        return TabulatedModel(rate=TraitRate(**spec.get("rate", {})),
                              table=TabulatedConvex.from_file(spec["table"]),
                              theta_fn=PowerTheta(float(theta.get("coef", 1.0)), float(theta.get("power", 2.0))),
                              c_theta=float(spec["c_theta"]),
                              is_symmetric=bool(spec.get("symmetric", False)))
    raise ConfigurationError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}", key="model.kind")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

REGISTRY: dict[str, dict] = {
    "quadratic": {
        "model": {"kind": "quadratic", "rate": {"base": 1.0, "curvature": 1.0, "kappa": 1.0}},
        "g": {"kind": "quadratic-well"},
        "T": 0.5,
        "smooth": True,
    },
    "moving-optimum": {
        "model": {"kind": "quadratic", "rate": {"base": 2.0, "curvature": 1.0, "center": 1.0, "kappa": 1.0}},
        "g": {"kind": "quadratic-well"},
        "T": 2.0,
        "smooth": True,
    },
    "jump": {
        "model": {"kind": "quadratic", "rate": {"base": 2.0, "slope": 0.5, "curvature": 0.0, "kappa": 1.0}},
        "g": {"kind": "double-well", "separation": 1.0, "right_height": 0.2},
        "T": 0.5,
        "smooth": False,
    },
    "kernel-gaussian": {
        "model": {"kind": "kernel", "birth": {"amp": 1.0, "floor": 0.1, "decay": 1.0},
                  "death": {"base": 0.0, "coef": 1.0}, "sigma": 1.0},
        "g": {"kind": "soft-well"},
        "T": 0.5,
        "smooth": True,
    },
}


def registry_entry(name: str) -> dict:
    if name not in REGISTRY:
        raise ConfigurationError(f"unknown scenario {name!r}; registered: {sorted(REGISTRY)}", key="scenario")
    return REGISTRY[name]
