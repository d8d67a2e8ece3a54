"""Monotone finite-difference stepping for ``u_t + H(I, x, u_x) = 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ConfigurationError, StepSizeError
from .grid import Field
from .model import ModelSpec
from .multiplier import Problem, RunResult, run

SCHEMES = ("upwind_convex", "lax_friedrichs")
DT_FLOOR = 1e-6


@dataclass(frozen=True)
class NumericalHamiltonian:
    """Monotone flux ``Hhat(I, x, a, b)`` with ``a = D^- u`` and ``b = D^+ u``.

    ``upwind_convex`` is the Godunov flux for convex ``H``: the minimum of
    ``H`` over ``[a, b]`` when ``a <= b`` and the maximum over ``[b, a]``
    otherwise.  ``lax_friedrichs`` uses local dissipation
    ``pad * max(|H_p(a)|, |H_p(b)|)`` frozen at ``I_ref``.
    """

    scheme: str = "upwind_convex"
    pad: float = 1.1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}", key="scheme")

    def dissipation(self, model: ModelSpec, I_ref: float, x, a, b) -> np.ndarray:
        return self.pad * np.maximum(np.abs(model.H_p(I_ref, x, a)), np.abs(model.H_p(I_ref, x, b)))

    def flux(self, model: ModelSpec, I: float, x, a, b, alpha=None) -> np.ndarray:
        if self.scheme == "upwind_convex":
            return godunov_flux(model, I, x, a, b)
        if alpha is None:
            alpha = self.dissipation(model, I, x, a, b)
        return model.H(I, x, 0.5 * (a + b)) - 0.5 * alpha * (b - a)


def godunov_flux(model: ModelSpec, I: float, x, a, b) -> np.ndarray:
    p0 = model.p_argmin(I, x)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    inner = model.H(I, x, np.clip(p0, lo, hi))
    with np.errstate(invalid="ignore"):
        outer = np.maximum(model.H(I, x, np.where(np.isfinite(a), a, p0)),
                           model.H(I, x, np.where(np.isfinite(b), b, p0)))
    return np.where(a <= b, inner, outer)


def one_sided(u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Backward and forward differences with ``+inf`` ghosts beyond the ends.

    Infinite ghost values make the boundary an outflow boundary: a minimiser
    is never fed from outside the domain.
    """
    d = np.diff(u) / h
    a = np.concatenate([[-np.inf], d])
    b = np.concatenate([d, [np.inf]])
    return a, b


def wave_speed(model: ModelSpec, I: float, x: np.ndarray, u: np.ndarray, h: float) -> float:
    a, b = one_sided(u, h)
    a = np.where(np.isfinite(a), a, b)
    b = np.where(np.isfinite(b), b, a)
    return float(max(np.max(np.abs(model.H_p(I, x, a))), np.max(np.abs(model.H_p(I, x, b)))))


def fd_step(u: Field, I: float, dt: float, model: ModelSpec, nh: NumericalHamiltonian | None = None,
            I_ref: float | None = None) -> Field:
    """One explicit step ``u - dt * Hhat``; checks the CFL ratio and finiteness."""
    nh = nh or NumericalHamiltonian()
    grid = u.grid
    x = grid.nodes
    speed = wave_speed(model, I, x, u.values, grid.h)
    if dt * speed / grid.h > 1.0 + 1e-12:
        raise StepSizeError(f"CFL ratio {dt * speed / grid.h:.3f} > 1 (dt={dt:.3e}, h={grid.h:.3e})")
    values = fd_update(u.values, I, dt, model, nh, x, grid.h, I if I_ref is None else I_ref)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise BlowUpError(f"non-finite value at node {int(bad[0])} (x={x[bad[0]]:.6g})")
    return Field(grid, values, u.time + dt)


def fd_update(u, I, dt, model, nh, x, h, I_ref, nodes=None):
    """Array-level update ``u - dt * Hhat`` (optionally at a subset of nodes only)."""
    a, b = one_sided(u, h)
    if nodes is not None:
        u, a, b, x = u[nodes], a[nodes], b[nodes], x[nodes]
    if nh.scheme == "upwind_convex":
        flux = godunov_flux(model, I, x, a, b)
    else:
        interior = np.isfinite(a) & np.isfinite(b)
        aa = np.where(interior, a, 0.0)
        bb = np.where(interior, b, 0.0)
        alpha = nh.dissipation(model, I_ref, x, aa, bb)
        lf = nh.flux(model, I, x, aa, bb, alpha)
        flux = np.where(interior, lf, godunov_flux(model, I, x, a, b))
    return u - dt * flux


class FDRoute:
    """Finite-difference route plugged into :func:`multiplier.run`."""

    name = "fd"

    def __init__(self, problem: Problem, nh: NumericalHamiltonian | None = None, cfl: float = 0.4,
                 dt_max: float | None = None):
        self.problem = problem
        self.model = problem.model
        self.grid = problem.grid
        self.x = self.grid.nodes
        self.nh = nh or NumericalHamiltonian()
        self.cfl = cfl
        self.dt_max = dt_max
        self._I_ref = 0.5 * sum(problem.bracket)
        self.cfl_ratios: list[float] = []

    def choose_dt(self, u, I_prev, first):
        h = self.grid.h
        if first:
            lo, hi = self.problem.bracket
            speed = max(wave_speed(self.model, I, self.x, u, h) for I in (lo, I_prev, hi))
        else:
            speed = wave_speed(self.model, I_prev, self.x, u, h)
        self._I_ref = I_prev
        dt = self.cfl * h / speed if speed > 0 else np.inf
        if self.dt_max is not None:
            dt = min(dt, self.dt_max)
        dt = min(dt, self.problem.T)
        return max(dt, DT_FLOOR)

    def step(self, u, I, dt, nodes=None):
        return fd_update(u, I, dt, self.model, self.nh, self.x, self.grid.h, self._I_ref, nodes)

    def accept(self, u, I, dt, t, u_next):
        ratio = dt * wave_speed(self.model, I, self.x, u, self.grid.h) / self.grid.h
        if ratio > 1.0 + 1e-12:
            raise StepSizeError(f"t={t:.6g}: CFL ratio {ratio:.3f} > 1 at the accepted multiplier I={I:.6g}")
        bad = np.flatnonzero(~np.isfinite(u_next))
        if bad.size:
            raise BlowUpError(f"t={t:.6g}: non-finite value at node {int(bad[0])}")
        self.cfl_ratios.append(ratio)

    def metadata(self):
        return {"scheme": self.nh.scheme, "cfl": self.cfl,
                "max_cfl_ratio": float(max(self.cfl_ratios)) if self.cfl_ratios else 0.0}


def run_fd(problem: Problem, nh: NumericalHamiltonian | None = None, cfl: float = 0.4) -> RunResult:
    return run(problem, FDRoute(problem, nh, cfl))
