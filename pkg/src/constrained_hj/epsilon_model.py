"""Vanishing-viscosity route: the population model in Hopf-Cole variables.

For fixed ``eps`` the density ``n = exp(-u / eps)`` solves the
selection-mutation equation; ``u`` then obeys

    u_t + R(I_eps, x) + |u_x|^2 = eps * u_xx,   I_eps = int psi * exp(-u / eps) dx.

Here the multiplier is computed from the state rather than root-found.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import BlowUpError, ConfigurationError, ModelInvalidError, StepSizeError
from .grid import Field, GridSpec, write_csv
from .model import QuadraticModel
from .multiplier import MultiplierPath, Problem, RunResult, l1_distance

EXP_LIMIT = 700.0


def _require_quadratic(model) -> None:
    if not isinstance(model, QuadraticModel):
        raise ModelInvalidError("the viscous route is defined for quadratic models only")


def max_stable_dt(values: np.ndarray, h: float, eps: float, cfl: float = 0.4) -> float:
    """``min(cfl * h / max|2 u_x|, cfl * h^2 / (2 eps))``."""
    grad = np.max(np.abs(np.diff(values))) / h if len(values) > 1 else 0.0
    adv = cfl * h / (2.0 * grad) if grad > 0 else np.inf
    return float(min(adv, cfl * h * h / (2.0 * eps)))


def eps_update(values: np.ndarray, x: np.ndarray, h: float, I: float, eps: float, dt: float,
               model: QuadraticModel) -> np.ndarray:
    """Array-level explicit step with reflecting (Neumann) ghosts.

    The gradient term uses local Lax-Friedrichs dissipation
    ``((a + b)/2)^2 - max(|2a|, |2b|) (b - a) / 2``.
    """
    u = np.asarray(values, dtype=float)
    ext = np.concatenate([[u[1]], u, [u[-2]]])
    a = (ext[1:-1] - ext[:-2]) / h
    b = (ext[2:] - ext[1:-1]) / h
    alpha = np.maximum(np.abs(2.0 * a), np.abs(2.0 * b))
    grad2 = (0.5 * (a + b)) ** 2 - 0.5 * alpha * (b - a)
    lap = (ext[2:] - 2.0 * ext[1:-1] + ext[:-2]) / (h * h)
    return u - dt * (model.rate(I, x) + grad2 - eps * lap)


def eps_step(u: Field, I_eps: float, eps: float, dt: float, model: QuadraticModel) -> Field:
    """One explicit viscous step; rejects steps above the parabolic bound."""
    _require_quadratic(model)
    h = u.grid.h
    if dt > 0.4 * h * h / (2.0 * eps) * (1.0 + 1e-12):
        raise StepSizeError(f"dt={dt:.3e} exceeds the parabolic bound {0.4 * h * h / (2 * eps):.3e}")
    out = eps_update(u.values, u.nodes, h, I_eps, eps, dt, model)
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise BlowUpError(f"non-finite value at node {int(bad[0])}")
    return Field(u.grid, out, u.time + dt)


def log_I_eps(u: Field, psi: Callable | None, eps: float) -> float:
    """``log int psi exp(-u/eps)`` by the trapezoid rule with the exponent shifted by ``min u``."""
    x = u.nodes
    w = np.ones_like(x) if psi is None else np.asarray(psi(x), dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ConfigurationError("psi must be positive and finite on the domain", key="psi")
    m = float(u.values.min())
    integral = trapezoid(w * np.exp(-(u.values - m) / eps), x)
    return -m / eps + float(np.log(integral))


def compute_I_eps(u: Field, psi: Callable | None, eps: float) -> float:
    lg = log_I_eps(u, psi, eps)
    if lg > EXP_LIMIT:
        raise BlowUpError(f"I_eps overflows: min u = {u.values.min():.3e} is too negative for eps={eps}")
    return float(np.exp(lg))


@dataclass
class EpsRunResult:
    eps: float
    snapshots: list[Field]
    path: MultiplierPath
    mass: np.ndarray
    problem: Problem

    @property
    def min_u(self) -> np.ndarray:
        return self.path.residuals

    def to_csv(self, path) -> None:
        p = self.path
        write_csv(path, ["t", "I", "min_u", "mass", "eps"],
                  np.column_stack([p.midpoints, p.values, p.residuals, self.mass, np.full(len(p), self.eps)]))


def run_eps(problem: Problem, eps: float, psi: Callable | None = None, cfl: float = 0.4) -> EpsRunResult:
    """Explicitly coupled time loop: ``I_eps`` from the current field drives each step."""
    _require_quadratic(problem.model)
    if not 0.0 < eps <= 1.0:
        raise ConfigurationError(f"eps must lie in (0, 1], got {eps}", key="eps")
    grid = problem.grid
    x = grid.nodes
    u = Field(grid, problem.initial_values(), 0.0)
    schedule = sorted(set(float(t) for t in problem.snapshot_times if t > 0) | {float(problem.T)})
    snapshots = [u]
    rows = []
    mass = []
    t = 0.0
    tiny = 1e-12 * max(1.0, problem.T)
    while schedule and t < problem.T - tiny:
        I = compute_I_eps(u, psi, eps)
        dt = max_stable_dt(u.values, grid.h, eps, cfl)
        hit = t + dt > schedule[0] - tiny
        if hit:
            dt = min(dt, schedule[0] - t)
        rows.append((t, dt, I, 0, u.min()))
        mass.append(float(trapezoid(np.exp(np.clip(-u.values / eps, None, EXP_LIMIT)), x)))
        u = eps_step(u, I, eps, dt, problem.model)
        t += dt
        if hit:
            t = schedule.pop(0)
            snapshots.append(Field(grid, u.values, t))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    path = MultiplierPath(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(int), arr[:, 4])
    return EpsRunResult(eps, snapshots, path, np.asarray(mass), problem)


@dataclass
class ConvergenceRow:
    eps: float
    I_l1: float
    sup_min_u: float
    u_linf: float
    order_I: float | None = None
    order_min_u: float | None = None
    order_u: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def core_linf(fields_a: Sequence[Field], fields_b: Sequence[Field], center: float, radius: float = 1.0) -> float:
    """``sup_t sup_{|x - center| <= radius} |u_a - u_b|`` over snapshots at common times."""
    worst = 0.0
    times_b = np.array([f.time for f in fields_b])
    for fa in fields_a:
        k = int(np.argmin(np.abs(times_b - fa.time)))
        if abs(times_b[k] - fa.time) > 1e-9:
            continue
        fb = fields_b[k]
        x = fa.nodes[np.abs(fa.nodes - center) <= radius]
        worst = max(worst, float(np.max(np.abs(np.interp(x, fa.nodes, fa.values)
                                                - np.interp(x, fb.nodes, fb.values)))))
    return worst


def convergence_table(problem: Problem, eps_list: Sequence[float], reference: RunResult,
                      psi: Callable | None = None, core_radius: float = 1.0,
                      runs: dict | None = None) -> list[ConvergenceRow]:
    """Error of the viscous route against a reference run for each ``eps``.

    The ``L1`` distance of the multipliers starts at ``0.1 T`` to skip the
    initial layer.  Observed orders are ``log(e_i / e_{i+1}) / log(eps_i / eps_{i+1})``.
    ``runs`` (optional) receives the :class:`EpsRunResult` objects keyed by ``eps``.
    """
    if len(eps_list) == 0:
        raise ConfigurationError("eps list is empty", key="eps")
    rows: list[ConvergenceRow] = []
    T = problem.T
    center = 0.5 * (problem.grid.lo + problem.grid.hi)
    for eps in eps_list:
        res = run_eps(problem, eps, psi)
        if runs is not None:
            runs[eps] = res
        rows.append(ConvergenceRow(
            eps=float(eps),
            I_l1=l1_distance(res.path, reference.path, 0.1 * T, T),
            sup_min_u=float(np.max(np.abs(res.path.residuals))) if len(res.path) else 0.0,
            u_linf=core_linf(res.snapshots, reference.snapshots, center, core_radius),
        ))
    for prev, row in zip(rows, rows[1:]):
        ratio = np.log(prev.eps / row.eps)
        row.order_I = _order(prev.I_l1, row.I_l1, ratio)
        row.order_min_u = _order(prev.sup_min_u, row.sup_min_u, ratio)
        row.order_u = _order(prev.u_linf, row.u_linf, ratio)
    return rows


def _order(e0: float, e1: float, log_ratio: float) -> float | None:
    if e0 <= 0 or e1 <= 0 or log_ratio == 0:
        return None
    return float(np.log(e0 / e1) / log_ratio)


def write_convergence_csv(rows: Sequence[ConvergenceRow], path) -> None:
    nan = float("nan")
    write_csv(path, ["eps", "I_l1", "sup_min_u", "u_linf", "order_I", "order_min_u", "order_u"],
              np.array([[r.eps, r.I_l1, r.sup_min_u, r.u_linf,
                         nan if r.order_I is None else r.order_I,
                         nan if r.order_min_u is None else r.order_min_u,
                         nan if r.order_u is None else r.order_u] for r in rows]))
