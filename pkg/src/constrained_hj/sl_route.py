"""Semi-Lagrangian dynamic programming for the variational (Hopf-Lax) solution.

One step computes

    u_next(y) = min_{foot} [ dt * L(I, y, (y - foot) / dt) + U(foot) ]

where ``U`` is the piecewise-linear interpolant of the previous field.  The
cost is convex in ``foot`` on every grid cell, so the minimum over a cell is
attained at the stationary point ``foot = y - dt * H_p(I, y, slope)``
clipped to the cell.  Scanning the cells within ``dt * V_max`` of ``y`` gives
the exact minimum over that window.  Evaluating ``L`` at the arrival point
``y`` keeps the scheme's cost at ``v = 0`` equal to ``dt * L(I, y, 0)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainTooSmallError, UnsupportedRunError
from .grid import Field, GridSpec, write_csv
from .model import ModelSpec
from .multiplier import MultiplierPath, Problem, RunResult, bv_seminorm, detect_jumps, run

log = logging.getLogger(__name__)

MAX_CANDIDATES = 513


@dataclass(frozen=True)
class ArgminMap:
    """Optimal velocity and foot of the characteristic at every node of one step."""

    v: np.ndarray
    foot: np.ndarray
    k_max: int
    saturated: int = 0


@dataclass(frozen=True)
class MinResult:
    value: np.ndarray
    v: np.ndarray
    foot: np.ndarray
    saturated: np.ndarray


def _select(cost: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise argmin with ties broken toward smaller ``|v|`` and then smaller ``v``."""
    best = cost.min(axis=1, keepdims=True)
    tie = cost <= best + 1e-13 * (1.0 + np.abs(best))
    av = np.where(tie, np.abs(v), np.inf)
    tie &= av <= av.min(axis=1, keepdims=True) + 1e-12
    return np.argmin(np.where(tie, v, np.inf), axis=1)


def hopf_lax_min(nodes: np.ndarray, values: np.ndarray, targets: np.ndarray, I: float, dt: float,
                 model: ModelSpec, k_max: int) -> MinResult:
    """Exact minimum of the one-step cost over all feet within ``k_max`` cells."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    n_cells = len(nodes) - 1
    lo, h = nodes[0], nodes[1] - nodes[0]
    j0 = np.clip(np.floor((y - lo) / h + 1e-9).astype(int), 0, n_cells - 1)
    offsets = np.arange(-k_max, k_max + 1)
    cells = j0[:, None] + offsets[None, :]
    valid = (cells >= 0) & (cells < n_cells)
    c = np.clip(cells, 0, n_cells - 1)
    xl, xr = nodes[c], nodes[c + 1]
    ul = values[c]
    slope = (values[c + 1] - ul) / h
    yy = y[:, None]
    v_stat = model.H_p(I, yy, slope)
    foot = np.clip(yy - dt * v_stat, xl, xr)
    v = (yy - foot) / dt
    cost = dt * model.L(I, yy, v) + ul + slope * (foot - xl)
    cost = np.where(valid, cost, np.inf)
    k = _select(cost, np.where(valid, v, np.inf))
    rows = np.arange(len(y))
    f_star = foot[rows, k]
    # saturation: optimum sits on the outer edge of the search window (not on the domain edge)
    left_edge = nodes[np.clip(j0 - k_max, 0, n_cells)]
    right_edge = nodes[np.clip(j0 + k_max + 1, 0, n_cells)]
    tol = 1e-9 * h
    sat = (((f_star <= left_edge + tol) & (j0 - k_max > 0))
           | ((f_star >= right_edge - tol) & (j0 + k_max + 1 < n_cells)))
    return MinResult(cost[rows, k], v[rows, k], f_star, sat)


def lattice_min(nodes: np.ndarray, values: np.ndarray, targets: np.ndarray, I: float, dt: float,
                model: ModelSpec, vgrid: np.ndarray) -> MinResult:
    """Minimum over an explicit velocity lattice; feet outside the grid are excluded."""
    nodes = np.asarray(nodes, dtype=float)
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    vg = np.asarray(vgrid, dtype=float)[None, :]
    foot = y[:, None] - dt * vg
    inside = (foot >= nodes[0] - 1e-12) & (foot <= nodes[-1] + 1e-12)
    if not np.all(inside.any(axis=1)):
        raise DomainTooSmallError("no velocity in the lattice keeps the foot inside the domain")
    interp = np.interp(np.clip(foot, nodes[0], nodes[-1]), nodes, values)
    v = np.broadcast_to(vg, foot.shape)
    cost = np.where(inside, dt * model.L(I, y[:, None], v) + interp, np.inf)
    k = _select(cost, np.where(inside, v, np.inf))
    rows = np.arange(len(y))
    sat = np.abs(v[rows, k]) >= np.abs(vg).max() - 1e-12
    return MinResult(cost[rows, k], v[rows, k], foot[rows, k], sat)


def velocity_radius(model: ModelSpec, x: np.ndarray, u: np.ndarray, h: float, I_values) -> float:
    """Twice the largest speed ``|H_p(I, x, p)|`` over ``|p| <= Lip(u)``.

    Optimal velocities are ``H_p`` evaluated at slopes of the interpolant, so
    for convex ``H`` they never exceed the value at ``p = +-Lip(u)``.
    """
    lip = float(np.max(np.abs(np.diff(u)))) / h
    speeds = [np.max(np.abs(model.H_p(I, x, s))) for I in I_values for s in (lip, -lip)]
    return 2.0 * float(max(speeds))


def sl_step(u: Field, I: float, dt: float, model: ModelSpec, vgrid: np.ndarray | None = None,
            v_max: float | None = None) -> tuple[Field, ArgminMap]:
    """One dynamic-programming step on all nodes.

    With ``vgrid`` the minimum runs over that velocity lattice only; otherwise
    the exact cellwise minimum over ``|v| <= v_max`` is used (``v_max`` from
    :func:`velocity_radius` at ``I`` when not given).
    """
    grid = u.grid
    x = grid.nodes
    if vgrid is not None:
        res = lattice_min(x, u.values, x, I, dt, model, vgrid)
        k_max = 0
    else:
        if v_max is None:
            v_max = velocity_radius(model, x, u.values, grid.h, [I])
        k_max = _window(dt, v_max, grid)
        res = hopf_lax_min(x, u.values, x, I, dt, model, k_max)
    return Field(grid, res.value, u.time + dt), ArgminMap(res.v, res.foot, k_max, int(res.saturated.sum()))


def _window(dt: float, v_max: float, grid: GridSpec) -> int:
    if dt * v_max >= 0.5 * (grid.hi - grid.lo):
        raise DomainTooSmallError(
            f"dt * V_max = {dt * v_max:.3g} exceeds half the domain width {0.5 * (grid.hi - grid.lo):.3g}")
    k = max(1, math.ceil(dt * v_max / grid.h))
    return min(k, (MAX_CANDIDATES - 1) // 2)


class SLRoute:
    """Semi-Lagrangian route; keeps the argmin maps needed for backtracking."""

    name = "sl"

    def __init__(self, problem: Problem, dt: float | None = None, n_steps: int = 400):
        self.problem = problem
        self.model = problem.model
        self.grid = problem.grid
        self.x = self.grid.nodes
        self.dt = dt if dt is not None else problem.T / n_steps
        self.k_max = 1
        self.v_max = 0.0
        self.maps: list[ArgminMap] = []
        self.k_history: list[int] = []
        self.saturation_events = 0

    def choose_dt(self, u, I_prev, first):
        lo, hi = self.problem.bracket
        self.v_max = velocity_radius(self.model, self.x, u, self.grid.h, (lo, I_prev, hi))
        wanted = math.ceil(self.dt * self.v_max / self.grid.h)
        self.k_max = _window(self.dt, self.v_max, self.grid)
        if wanted > self.k_max:
            log.warning("velocity search capped at %d candidates (wanted %d)", 2 * self.k_max + 1, 2 * wanted + 1)
        return self.dt

    def step(self, u, I, dt, nodes=None):
        targets = self.x if nodes is None else self.x[nodes]
        return hopf_lax_min(self.x, u, targets, I, dt, self.model, self.k_max).value

    def accept(self, u, I, dt, t, u_next):
        res = hopf_lax_min(self.x, u, self.x, I, dt, self.model, self.k_max)
        n_sat = int(res.saturated.sum())
        if n_sat:
            self.saturation_events += n_sat
            log.warning("t=%.6g: %d nodes chose a velocity on the search boundary", t, n_sat)
        self.maps.append(ArgminMap(res.v, res.foot, self.k_max, n_sat))
        self.k_history.append(self.k_max)

    def metadata(self):
        return {"dt": self.dt, "saturation_events": self.saturation_events,
                "max_window_cells": max(self.k_history) if self.k_history else 0}


def run_sl(problem: Problem, dt: float | None = None, n_steps: int = 400) -> RunResult:
    """Semi-Lagrangian run with argmin maps and per-step fields kept for backtracking."""
    route = SLRoute(problem, dt, n_steps)
    result = run(problem, route, keep_history=True)
    result.extras["argmin_maps"] = route.maps
    result.extras["k_max"] = route.k_history
    return result


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Discrete minimising curve: ``gamma[k]`` at ``s[k]``, ``v[k]`` on ``[s[k], s[k+1]]``."""

    s: np.ndarray
    gamma: np.ndarray
    v: np.ndarray
    I: np.ndarray
    action: float
    value: float = float("nan")
    saturated: int = 0

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.s)

    @property
    def t(self) -> float:
        return float(self.s[-1])

    @property
    def bv_of_velocity(self) -> float:
        return bv_seminorm(self.v) if len(self.v) >= 2 else 0.0

    @property
    def mean_speed(self) -> float:
        return float(np.sum(np.abs(self.v) * self.dt) / self.t) if self.t > 0 else 0.0

    def to_csv(self, path: str | Path) -> None:
        v = np.append(self.v, self.v[-1] if len(self.v) else np.nan)
        write_csv(path, ["s", "gamma", "gamma_dot"], np.column_stack([self.s, self.gamma, v]))

    @classmethod
    def from_curve(cls, s, gamma, I, model: ModelSpec, g) -> "Trajectory":
        """Build a trajectory (and its discrete action) from arbitrary positions."""
        s = np.asarray(s, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        I = np.asarray(I, dtype=float)
        dt = np.diff(s)
        v = np.diff(gamma) / dt
        action = float(np.sum(dt * model.L(I, gamma[1:], v)) + g(np.array([gamma[0]]))[0])
        return cls(s, gamma, v, I, action)


def backtrack_trajectory(run_result: RunResult, t: float, x: float) -> Trajectory:
    """Follow the optimal feet backwards from ``(t, x)`` to time 0."""
    maps = run_result.extras.get("argmin_maps")
    hist = run_result.history
    if not maps or not hist:
        raise UnsupportedRunError("backtracking needs a semi-Lagrangian run with stored argmin maps")
    path = run_result.path
    grid = run_result.grid
    nodes = grid.nodes
    model = run_result.problem.model
    ends = path.t_end
    n = int(np.argmin(np.abs(ends - t)))
    if abs(ends[n] - t) > 0.5 * path.dt[n]:
        if t <= 0.5 * path.dt[0]:
            n = -1
        else:
            raise ValueError(f"t={t} is not a step time of the run")
    y = float(nodes[grid.nearest_index(x)])
    value = float(hist[n + 1][grid.nearest_index(x)])
    m = n + 1
    gamma = np.empty(m + 1)
    v = np.empty(m)
    sat = 0
    gamma[m] = y
    for k in range(n, -1, -1):
        res = hopf_lax_min(nodes, hist[k], [gamma[k + 1]], path.values[k], path.dt[k], model,
                           run_result.extras["k_max"][k])
        v[k] = res.v[0]
        gamma[k] = res.foot[0]
        sat += int(res.saturated[0])
    s = np.concatenate([[0.0], ends[:m]])
    I = path.values[:m]
    action = float(np.sum(path.dt[:m] * model.L(I, gamma[1:], v))
                   + run_result.problem.g(np.array([gamma[0]]))[0])
    return Trajectory(s, gamma, v, I, action, value, sat)


def euler_lagrange_residual(traj: Trajectory, I_path: MultiplierPath | None, model: ModelSpec) -> float:
    """Sup norm of the integrated discrete Euler-Lagrange defect.

    With momenta ``p_k = d_v L(I_k, gamma_{k+1}, v_k)`` the defect of step
    ``k`` is ``p_k + dt_k d_x L(I_k, gamma_{k+1}, v_k) - p_{k+1}``.  Partial
    sums are taken within stretches free of multiplier jumps (the equation
    holds in the distributional sense, so its integrated form is compared);
    defects straddling a jump are dropped.
    """
    if len(traj.v) < 2:
        return 0.0
    dt = traj.dt
    mid = traj.s[:-1] + 0.5 * dt
    I = I_path.value_at(mid) if I_path is not None and len(I_path) else traj.I
    p = model.L_v(I, traj.gamma[1:], traj.v)
    lx = model.L_x(I, traj.gamma[1:], traj.v)
    r = p[:-1] + dt[:-1] * lx[:-1] - p[1:]
    cut = np.zeros(len(r), dtype=bool)
    if I_path is not None and len(I_path) >= 3:
        for tj in detect_jumps(I_path):
            cut |= np.isclose(traj.s[1:-1], tj, atol=0.5 * float(dt.min()))
    worst = 0.0
    acc = 0.0
    for k in range(len(r)):
        if cut[k]:
            acc = 0.0
            continue
        acc += r[k]
        worst = max(worst, abs(acc))
    return float(worst)
