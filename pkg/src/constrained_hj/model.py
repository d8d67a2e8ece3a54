"""Hamiltonian / Lagrangian models, Legendre transforms and assumption checks.

Three model kinds are provided:

* ``quadratic``: ``H(I, x, p) = R(I, x) + |p|^2`` with ``L = |v|^2/4 - R``.
* ``kernel``: ``H = B(I, x) K(p) - D(I, x)`` where ``K`` is the Laplace
  transform of a symmetric mutation kernel, ``L = B * Lk(v / B) + D``.
* ``custom-tabulated``: ``H = R(I, x) + h(p)`` where ``h`` is read from a
  two-column table; the conjugate is computed numerically.

All evaluators are vectorised over broadcastable ``I``, ``x``, ``p`` / ``v``
arrays and are pure; model objects are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, ClassVar

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import lambertw

from .errors import ConfigurationError, ConvexityError, DomainError, ModelInvalidError

ArrayLike = float | np.ndarray


# ---------------------------------------------------------------------------
# rate functions R, B, D
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraitRate:
    """Growth rate ``R(I, x) = base + slope*x - curvature*(x - center)**2 - kappa*I``."""

    base: float = 1.0
    slope: float = 0.0
    curvature: float = 1.0
    center: float = 0.0
    kappa: float = 1.0

    def __call__(self, I, x):
        return self.base + self.slope * x - self.curvature * (x - self.center) ** 2 - self.kappa * I

    def d_I(self, I, x):
        return -self.kappa + 0.0 * (np.asarray(I, dtype=float) + np.asarray(x, dtype=float))

    def d_x(self, I, x):
        x = np.asarray(x, dtype=float)
        return self.slope - 2.0 * self.curvature * (x - self.center) + 0.0 * np.asarray(I, dtype=float)


@dataclass(frozen=True)
class BirthRate:
    """``B(I, x) = amp * exp(-x**2) * exp(-decay*I) + floor``."""

    amp: float = 1.0
    floor: float = 0.1
    decay: float = 1.0

    def __call__(self, I, x):
        return self.amp * np.exp(-np.asarray(x) ** 2 - self.decay * np.asarray(I)) + self.floor

    def d_I(self, I, x):
        return -self.decay * self.amp * np.exp(-np.asarray(x) ** 2 - self.decay * np.asarray(I))

    def d_x(self, I, x):
        x = np.asarray(x)
        return -2.0 * x * self.amp * np.exp(-x**2 - self.decay * np.asarray(I))


@dataclass(frozen=True)
class DeathRate:
    """``D(I, x) = base + coef * I``."""

    base: float = 0.0
    coef: float = 1.0

    def __call__(self, I, x):
        return self.base + self.coef * np.asarray(I) + 0.0 * np.asarray(x)

    def d_I(self, I, x):
        return self.coef + 0.0 * (np.asarray(I) + np.asarray(x))

    def d_x(self, I, x):
        return 0.0 * (np.asarray(I) + np.asarray(x))


@dataclass(frozen=True)
class CallableRate:
    """Rate function assembled from user callables (value and both partials)."""

    value: Callable
    dI: Callable
    dx: Callable
    name: str = "callable"

    def __call__(self, I, x):
        return self.value(I, x)

    def d_I(self, I, x):
        return self.dI(I, x)

    def d_x(self, I, x):
        return self.dx(I, x)


# ---------------------------------------------------------------------------
# mutation kernel transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianKernel:
    """Centred Gaussian mutation kernel with standard deviation ``sigma``.

    Its Laplace transform is ``K(p) = exp(sigma^2 p^2 / 2)``; the conjugate
    ``Lk`` is evaluated through the Lambert W function: the maximiser of
    ``p*w - K(p)`` satisfies ``(sigma p)^2 = W(w^2 / sigma^2)``.
    """

    sigma: float = 1.0

    def K(self, p):
        return np.exp(0.5 * self.sigma**2 * np.asarray(p, dtype=float) ** 2)

    def K_p(self, p):
        p = np.asarray(p, dtype=float)
        return self.sigma**2 * p * self.K(p)

    def K_pp(self, p):
        p = np.asarray(p, dtype=float)
        s2 = self.sigma**2
        return s2 * (1.0 + s2 * p**2) * self.K(p)

    def conj_slope(self, w):
        """``p = Lk'(w)``, i.e. the inverse of ``K'``."""
        w = np.asarray(w, dtype=float)
        s = self.sigma
        q2 = np.real(lambertw((w / s) ** 2))
        p = np.sign(w) * np.sqrt(np.maximum(q2, 0.0)) / s
        # one Newton polish on K'(p) = w
        p = p - (self.K_p(p) - w) / self.K_pp(p)
        return p

    def conj(self, w):
        w = np.asarray(w, dtype=float)
        p = self.conj_slope(w)
        return p * w - self.K(p)

    def conj_vv(self, w):
        return 1.0 / self.K_pp(self.conj_slope(w))


# ---------------------------------------------------------------------------
# derivative bundle and boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivativeBundle:
    """Value of ``H`` or ``L`` with its partial derivatives at one point."""

    value: float
    d_I: float
    d_x: np.ndarray
    d_p_or_d_v: np.ndarray


@dataclass(frozen=True)
class Validity:
    """Coordinate intervals inside which a model may be evaluated."""

    I: tuple[float, float] = (-np.inf, np.inf)
    x: tuple[float, float] = (-np.inf, np.inf)
    p: tuple[float, float] = (-np.inf, np.inf)
    v: tuple[float, float] = (-np.inf, np.inf)

    def check(self, **coords: ArrayLike) -> None:
        for name, value in coords.items():
            lo, hi = getattr(self, name)
            arr = np.atleast_1d(np.asarray(value, dtype=float))
            bad = (arr < lo) | (arr > hi) | ~np.isfinite(arr)
            if bad.any():
                raise DomainError(name, float(arr[bad][0]), (lo, hi))


@dataclass(frozen=True)
class AssumptionBox:
    """Sampling box for the assumption checks.

    ``I_interval`` is ``(0, J)`` or ``(-J, J)``; the x-ball is centred at
    ``x_center`` with radius ``x_radius``; velocities range over
    ``[-v_radius, v_radius]``.
    """

    I_interval: tuple[float, float] = (0.0, 10.0)
    x_center: float = 0.0
    x_radius: float = 4.0
    v_radius: float = 20.0

    @property
    def symmetric_I(self) -> bool:
        return self.I_interval[0] < 0.0

    def I_samples(self, n: int) -> np.ndarray:
        return np.linspace(self.I_interval[0], self.I_interval[1], n)

    def x_samples(self, n: int) -> np.ndarray:
        return np.linspace(self.x_center - self.x_radius, self.x_center + self.x_radius, n)

    def v_samples(self, n: int) -> np.ndarray:
        return np.linspace(-self.v_radius, self.v_radius, n)


def _box_lattice(box: AssumptionBox, n: int) -> tuple[np.ndarray, np.ndarray]:
    I, x = np.meshgrid(box.I_samples(n), box.x_samples(n), indexing="ij")
    return I.ravel(), x.ravel()


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Base class for Hamiltonian / Lagrangian pairs.

    Subclasses implement the vectorised evaluators.  ``symmetric`` records
    whether ``H(I, x, .)`` is even in ``p`` (which implies (L5)).
    """

    kind: ClassVar[str] = "abstract"
    validity: Validity = field(default_factory=Validity, kw_only=True)

    symmetric: ClassVar[bool] = True

    # -- Hamiltonian ------------------------------------------------------
    def H(self, I, x, p):
        raise NotImplementedError

    def H_I(self, I, x, p):
        raise NotImplementedError

    def H_x(self, I, x, p):
        raise NotImplementedError

    def H_p(self, I, x, p):
        raise NotImplementedError

    def H_pp(self, I, x, p):
        raise NotImplementedError

    def p_argmin(self, I, x):
        """Minimiser of ``p -> H(I, x, p)``."""
        return np.zeros(np.broadcast(I, x).shape)

    # -- Lagrangian -------------------------------------------------------
    def L(self, I, x, v):
        raise NotImplementedError

    def L_I(self, I, x, v):
        raise NotImplementedError

    def L_x(self, I, x, v):
        raise NotImplementedError

    def L_v(self, I, x, v):
        raise NotImplementedError

    def L_vv(self, I, x, v):
        raise NotImplementedError

    # -- assumption data --------------------------------------------------
    def theta(self, box: AssumptionBox) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
        """Super-linear lower bound ``Theta`` and constant ``C_Theta`` on ``box``."""
        raise NotImplementedError

    def dx_bound_coeffs(self, box: AssumptionBox) -> tuple[float, float]:
        """Constants ``(alpha_K, beta_K)`` with ``|d_x L| <= alpha_K + beta_K L`` on ``box``."""
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class QuadraticModel(ModelSpec):
    """``H = R(I, x) + |p|^2``; the Hopf-Cole limit of the selection-mutation model."""

    kind: ClassVar[str] = "quadratic"
    rate: TraitRate | CallableRate = field(default_factory=TraitRate)

    def H(self, I, x, p):
        return self.rate(I, x) + np.asarray(p, dtype=float) ** 2

    def H_I(self, I, x, p):
        return self.rate.d_I(I, x) + 0.0 * np.asarray(p)

    def H_x(self, I, x, p):
        return self.rate.d_x(I, x) + 0.0 * np.asarray(p)

    def H_p(self, I, x, p):
        return 2.0 * np.asarray(p, dtype=float) + 0.0 * (np.asarray(I) + np.asarray(x))

    def H_pp(self, I, x, p):
        return 2.0 + 0.0 * (np.asarray(I) + np.asarray(x) + np.asarray(p))

    def L(self, I, x, v):
        return 0.25 * np.asarray(v, dtype=float) ** 2 - self.rate(I, x)

    def L_I(self, I, x, v):
        return -self.rate.d_I(I, x) + 0.0 * np.asarray(v)

    def L_x(self, I, x, v):
        return -self.rate.d_x(I, x) + 0.0 * np.asarray(v)

    def L_v(self, I, x, v):
        return 0.5 * np.asarray(v, dtype=float) + 0.0 * (np.asarray(I) + np.asarray(x))

    def L_vv(self, I, x, v):
        return 0.5 + 0.0 * (np.asarray(I) + np.asarray(x) + np.asarray(v))

    def theta(self, box):
        I, x = _box_lattice(box, 64)
        c_theta = max(float(np.max(self.rate(I, x))), 0.0)
        return (lambda r: np.asarray(r, dtype=float) ** 2 / 8.0), c_theta

    def dx_bound_coeffs(self, box):
        I, x = _box_lattice(box, 64)
        sup_r = max(float(np.max(self.rate(I, x))), 0.0)
        alpha = float(np.max(np.abs(self.rate.d_x(I, x)))) + sup_r
        return alpha, 1.0

    def describe(self):
        return {"kind": self.kind, "rate": _params(self.rate)}


@dataclass(frozen=True)
class KernelModel(ModelSpec):
    """``H = B(I, x) K(p) - D(I, x)`` for a symmetric mutation kernel."""

    kind: ClassVar[str] = "kernel"
    birth: BirthRate | CallableRate = field(default_factory=BirthRate)
    death: DeathRate | CallableRate = field(default_factory=DeathRate)
    kernel: GaussianKernel = field(default_factory=GaussianKernel)
    validity: Validity = field(default_factory=lambda: Validity(p=(-25.0, 25.0)), kw_only=True)

    def H(self, I, x, p):
        return self.birth(I, x) * self.kernel.K(p) - self.death(I, x)

    def H_I(self, I, x, p):
        return self.birth.d_I(I, x) * self.kernel.K(p) - self.death.d_I(I, x)

    def H_x(self, I, x, p):
        return self.birth.d_x(I, x) * self.kernel.K(p) - self.death.d_x(I, x)

    def H_p(self, I, x, p):
        return self.birth(I, x) * self.kernel.K_p(p)

    def H_pp(self, I, x, p):
        return self.birth(I, x) * self.kernel.K_pp(p)

    def _B(self, I, x):
        B = self.birth(I, x)
        if np.any(np.asarray(B) <= 0.0):
            raise ModelInvalidError("birth rate B must be positive for the kernel Lagrangian")
        return B

    def L(self, I, x, v):
        B = self._B(I, x)
        return B * self.kernel.conj(np.asarray(v) / B) + self.death(I, x)

    def _p_of_v(self, I, x, v):
        return self.kernel.conj_slope(np.asarray(v) / self._B(I, x))

    def L_I(self, I, x, v):
        p = self._p_of_v(I, x, v)
        return -self.birth.d_I(I, x) * self.kernel.K(p) + self.death.d_I(I, x)

    def L_x(self, I, x, v):
        p = self._p_of_v(I, x, v)
        return -self.birth.d_x(I, x) * self.kernel.K(p) + self.death.d_x(I, x)

    def L_v(self, I, x, v):
        return self._p_of_v(I, x, v)

    def L_vv(self, I, x, v):
        p = self._p_of_v(I, x, v)
        return 1.0 / (self.birth(I, x) * self.kernel.K_pp(p))

    def theta(self, box):
        # L is decreasing in B, so B_max * Lk(v / B_max) + D_min bounds it below.
        I, x = _box_lattice(box, 64)
        b_max = float(np.max(self.birth(I, x)))
        d_min = float(np.min(self.death(I, x)))
        kern = self.kernel

        def theta(r):
            r = np.asarray(r, dtype=float)
            return b_max * (1.0 + kern.conj(r / b_max))

        return theta, b_max - d_min

    def dx_bound_coeffs(self, box):
        # |d_x L| <= |B_x| K(p) + |D_x| and K(p) <= 2 + Lk(v/B) by the
        # inequality d_v Lk(w) w <= 2 (1 + Lk(w)).
        I, x = _box_lattice(box, 64)
        B = self.birth(I, x)
        beta = float(np.max(np.abs(self.birth.d_x(I, x) / B)))
        b_max = float(np.max(B))
        d_neg = max(0.0, -float(np.min(self.death(I, x))))
        alpha = beta * (2.0 * b_max + d_neg) + float(np.max(np.abs(self.death.d_x(I, x))))
        return alpha, beta

    def describe(self):
        return {
            "kind": self.kind,
            "birth": _params(self.birth),
            "death": _params(self.death),
            "kernel": {"type": "gaussian", "sigma": self.kernel.sigma},
        }


class TabulatedConvex:
    """Convex function of ``p`` given by samples, smoothed with a cubic spline."""

    def __init__(self, p: np.ndarray, values: np.ndarray, n_fine: int = 4097):
        p = np.asarray(p, dtype=float)
        values = np.asarray(values, dtype=float)
        if p.ndim != 1 or p.size < 4 or p.shape != values.shape:
            raise ConfigurationError("tabulated Hamiltonian needs >= 4 (p, value) rows")
        if np.any(np.diff(p) <= 0):
            raise ConfigurationError("tabulated abscissae must be strictly increasing")
        self.p = p
        self.values = values
        self.spline = CubicSpline(p, values)
        fine = np.linspace(p[0], p[-1], n_fine)
        slopes = self.spline(fine, 1)
        if np.any(np.diff(slopes) < -1e-9 * max(1.0, np.abs(slopes).max())):
            k = int(np.argmax(np.diff(slopes) < 0))
            raise ConvexityError((fine[k], fine[k + 1], fine[min(k + 2, n_fine - 1)]),
                                 float(slopes[k] - slopes[k + 1]))
        self._fine = fine
        self._slopes = np.maximum.accumulate(slopes)
        self._argmin = float(fine[np.argmin(self.spline(fine))])

    @classmethod
    def from_file(cls, path: str | Path) -> "TabulatedConvex":
        return cls(*load_table(path))

    def __call__(self, p):
        return self.spline(np.clip(p, self.p[0], self.p[-1]))

    def d1(self, p):
        return self.spline(np.clip(p, self.p[0], self.p[-1]), 1)

    def d2(self, p):
        return np.maximum(self.spline(np.clip(p, self.p[0], self.p[-1]), 2), 1e-300)

    def slope_inverse(self, v):
        return np.interp(v, self._slopes, self._fine)

    @property
    def argmin(self) -> float:
        return self._argmin


@dataclass(frozen=True)
class TabulatedModel(ModelSpec):
    """``H = R(I, x) + h(p)`` with ``h`` tabulated; ``Theta`` and ``C_Theta`` are user supplied."""

    kind: ClassVar[str] = "custom-tabulated"
    rate: TraitRate | CallableRate = field(default_factory=TraitRate)
    table: TabulatedConvex | None = None
    theta_fn: Callable[[np.ndarray], np.ndarray] | None = None
    c_theta: float = 0.0
    is_symmetric: bool = False

    def __post_init__(self):
        if self.table is None:
            raise ModelInvalidError("custom-tabulated model requires a table")
        if self.theta_fn is None:
            raise ModelInvalidError("custom-tabulated model must supply Theta and C_Theta")

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.is_symmetric

    def H(self, I, x, p):
        return self.rate(I, x) + self.table(p)

    def H_I(self, I, x, p):
        return self.rate.d_I(I, x) + 0.0 * np.asarray(p)

    def H_x(self, I, x, p):
        return self.rate.d_x(I, x) + 0.0 * np.asarray(p)

    def H_p(self, I, x, p):
        return self.table.d1(p) + 0.0 * (np.asarray(I) + np.asarray(x))

    def H_pp(self, I, x, p):
        return self.table.d2(p) + 0.0 * (np.asarray(I) + np.asarray(x))

    def p_argmin(self, I, x):
        return np.full(np.broadcast(I, x).shape, self.table.argmin)

    def L(self, I, x, v):
        p = self.table.slope_inverse(v)
        return p * v - self.table(p) - self.rate(I, x)

    def L_I(self, I, x, v):
        return -self.rate.d_I(I, x) + 0.0 * np.asarray(v)

    def L_x(self, I, x, v):
        return -self.rate.d_x(I, x) + 0.0 * np.asarray(v)

    def L_v(self, I, x, v):
        return self.table.slope_inverse(v) + 0.0 * (np.asarray(I) + np.asarray(x))

    def L_vv(self, I, x, v):
        return 1.0 / self.table.d2(self.table.slope_inverse(v)) + 0.0 * (np.asarray(I) + np.asarray(x))

    def theta(self, box):
        return self.theta_fn, float(self.c_theta)

    def dx_bound_coeffs(self, box):
        I, x = _box_lattice(box, 64)
        return float(np.max(np.abs(self.rate.d_x(I, x)))) + float(self.c_theta), 1.0

    def describe(self):
        return {"kind": self.kind, "rate": _params(self.rate), "c_theta": self.c_theta}


def _params(obj) -> dict:
    if hasattr(obj, "__dataclass_fields__") and not isinstance(obj, CallableRate):
        return {"type": type(obj).__name__, **{k: getattr(obj, k) for k in obj.__dataclass_fields__}}
    return {"type": type(obj).__name__}


def load_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``(abscissa, value)`` text table with increasing abscissae."""
    try:
        data = np.loadtxt(path, delimiter=None, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read table {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ConfigurationError(f"table {path} must have exactly two columns")
    if np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigurationError(f"table {path}: abscissae must be strictly increasing")
    return data[:, 0], data[:, 1]


# ---------------------------------------------------------------------------
# point evaluators
# ---------------------------------------------------------------------------


def _scalar_position(x) -> float:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size != 1:
        raise ValueError("only d = 1 positions are supported")
    return float(arr[0])


def eval_hamiltonian(model: ModelSpec, I: float, x, p) -> DerivativeBundle:
    """Evaluate ``H`` and its partial derivatives at one point."""
    x, p = _scalar_position(x), _scalar_position(p)
    model.validity.check(I=I, x=x, p=p)
    return DerivativeBundle(
        value=float(model.H(I, x, p)),
        d_I=float(model.H_I(I, x, p)),
        d_x=np.array([float(model.H_x(I, x, p))]),
        d_p_or_d_v=np.array([float(model.H_p(I, x, p))]),
    )


def eval_lagrangian(model: ModelSpec, I: float, x, v) -> DerivativeBundle:
    """Evaluate ``L`` and its partial derivatives at one point.

    Raises :class:`ModelInvalidError` for kernel models whose birth rate is
    not positive at ``(I, x)``.
    """
    x, v = _scalar_position(x), _scalar_position(v)
    model.validity.check(I=I, x=x, v=v)
    return DerivativeBundle(
        value=float(model.L(I, x, v)),
        d_I=float(model.L_I(I, x, v)),
        d_x=np.array([float(model.L_x(I, x, v))]),
        d_p_or_d_v=np.array([float(model.L_v(I, x, v))]),
    )


# ---------------------------------------------------------------------------
# numerical Legendre transform
# ---------------------------------------------------------------------------


def check_convex(grid: np.ndarray, values: np.ndarray, tol_convex: float = 1e-9) -> None:
    """Raise :class:`ConvexityError` unless the secant slopes are non-decreasing."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.size < 3:
        return
    slopes = np.diff(values) / np.diff(grid)
    drop = slopes[:-1] - slopes[1:]
    # second-difference scale so tol_convex has the meaning of a second difference
    h = 0.5 * (grid[2:] - grid[:-2])
    bad = drop * h > tol_convex
    if bad.any():
        k = int(np.argmax(bad))
        raise ConvexityError((float(grid[k]), float(grid[k + 1]), float(grid[k + 2])), float(drop[k]))


def legendre_conjugate(grid, values, dual_grid, tol_convex: float = 1e-9, chunk: int = 512) -> np.ndarray:
    """Discrete convex conjugate ``f*(v) = max_i (p_i v - f_i)`` by dense search.

    ``O(len(grid) * len(dual_grid))``; intended for grids of a few thousand
    points.  The result is exactly convex in ``v`` because it is a maximum of
    affine functions.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    dual = np.asarray(dual_grid, dtype=float)
    if grid.shape != values.shape or grid.ndim != 1:
        raise ValueError("grid and values must be 1-d arrays of equal length")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    check_convex(grid, values, tol_convex)
    out = np.empty(dual.shape)
    flat = dual.ravel()
    res = out.ravel()
    for start in range(0, flat.size, chunk):
        v = flat[start:start + chunk]
        res[start:start + chunk] = np.max(v[:, None] * grid[None, :] - values[None, :], axis=1)
    return out


def interpolation_error_bound(grid: np.ndarray, second_derivative_max: float) -> float:
    """Piecewise-linear interpolation error bound ``h^2 max|f''| / 8``."""
    h = float(np.max(np.diff(np.asarray(grid, dtype=float))))
    return h * h * second_derivative_max / 8.0


# ---------------------------------------------------------------------------
# assumption checks
# ---------------------------------------------------------------------------


@dataclass
class AssumptionEntry:
    name: str
    passed: bool
    worst: float
    tolerance: float
    witness: dict
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst": float(self.worst),
            "tolerance": float(self.tolerance),
            "witness": {k: float(v) for k, v in self.witness.items()},
            "note": self.note,
        }


@dataclass
class AssumptionReport:
    """Per-assumption pass/fail record with worst-case witnesses."""

    entries: dict[str, AssumptionEntry]
    box: AssumptionBox
    n_per_axis: int

    HARD: ClassVar[tuple[str, ...]] = ("L1", "L2", "L3", "L4")

    @property
    def I_interval_used(self) -> str:
        return "[-J,J]" if self.box.symmetric_I else "[0,J]"

    @property
    def hard_failures(self) -> list[str]:
        return [k for k in self.HARD if k in self.entries and not self.entries[k].passed]

    def passed(self, name: str) -> bool:
        return self.entries[name].passed

    def as_dict(self) -> dict:
        return {
            "I_interval": self.I_interval_used,
            "box": {
                "I": list(self.box.I_interval),
                "x_center": self.box.x_center,
                "x_radius": self.box.x_radius,
                "v_radius": self.box.v_radius,
            },
            "n_per_axis": self.n_per_axis,
            "entries": {k: e.as_dict() for k, e in self.entries.items()},
            "hard_failures": self.hard_failures,
        }


def _entry_min(name, values, tol, coords, note="") -> AssumptionEntry:
    k = int(np.argmin(values))
    worst = float(values[k])
    return AssumptionEntry(name, worst > -tol if tol > 0 else worst > 0, worst, tol,
                           {c: arr[k] for c, arr in coords.items()}, note)


def check_assumptions(model: ModelSpec, box: AssumptionBox, n: int = 64, tol: float = 1e-10) -> AssumptionReport:
    """Sample the structural assumptions on a lattice over ``box``.

    Failures are report entries, never exceptions.
    """
    Ig, xg, vg = np.meshgrid(box.I_samples(n), box.x_samples(n), box.v_samples(n), indexing="ij")
    I, x, v = Ig.ravel(), xg.ravel(), vg.ravel()
    coords = {"I": I, "x": x, "v": v}
    entries: dict[str, AssumptionEntry] = {}

    L = model.L(I, x, v)
    entries["L1"] = _entry_min("L1", model.L_vv(I, x, v), 0.0, coords, "min d2L/dv2 > 0")
    entries["L2"] = _entry_min("L2", model.L_I(I, x, v), 0.0, coords, "min dL/dI > 0")

    theta, c_theta = model.theta(box)
    slack = L - theta(np.abs(v)) + c_theta
    e3 = _entry_min("L3", slack, tol, coords, f"L - Theta(|v|) + C_Theta >= 0, C_Theta={c_theta:.6g}")
    radii = box.v_radius * np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    ratios = theta(radii) / radii
    if not np.all(np.diff(ratios) > 0):
        e3.passed = False
        e3.note += "; Theta(r)/r not increasing at the largest radii"
    entries["L3"] = e3

    alpha, beta = model.dx_bound_coeffs(box)
    margin = alpha + beta * L - np.abs(model.L_x(I, x, v))
    entries["L4"] = _entry_min("L4", margin, tol, coords, f"alpha_K={alpha:.6g}, beta_K={beta:.6g}")

    L0 = model.L(I, x, np.zeros_like(v))
    entries["L5"] = _entry_min("L5", L - L0, tol, coords, "L(I,x,v) >= L(I,x,0)")

    if isinstance(model, KernelModel):
        w = np.linspace(-box.v_radius, box.v_radius, 4 * n + 1)
        k = model.kernel
        gap = 2.0 * (1.0 + k.conj(w)) - k.conj_slope(w) * w
        entries["DL_quad"] = _entry_min("DL_quad", gap, 1e-8, {"v": w},
                                        "d_v Lk(v) v <= 2 (1 + Lk(v))")
    return AssumptionReport(entries, box, n)
