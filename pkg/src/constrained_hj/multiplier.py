"""Constraint engine: root-finding for the multiplier and the shared time loop.

Every route supplies a one-step operator ``u -> u_next(I)`` that is
non-decreasing in ``I`` at each node.  The multiplier of a step is the root of
``I -> min_x u_next(I)``, found by bisection with a final secant polish.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    BoundaryProximityError,
    ConfigurationError,
    ConstrainedHJError,
    InfeasibleMultiplierError,
)
from .grid import Field, GridSpec, write_csv
from .model import ModelSpec

log = logging.getLogger(__name__)

# stepper(u_values, I, dt, nodes=None) -> u_next values (at ``nodes`` if given)
Stepper = Callable[..., np.ndarray]


@dataclass(frozen=True)
class RootInfo:
    iterations: int
    residual: float
    bracket: tuple[float, float]
    evaluations: int


def solve_multiplier_step(
    stepper: Stepper,
    u: np.ndarray,
    dt: float,
    bracket: tuple[float, float] = (0.0, 10.0),
    tol_constraint: float = 1e-8,
    cap: float = 1e4,
    width: float = 1e-10,
) -> tuple[float, np.ndarray, RootInfo]:
    """Find ``I`` with ``min stepper(u, I, dt) = 0``.

    The upper end of ``bracket`` is expanded geometrically (up to ``cap``)
    until the minimum is non-negative; the lower end is never moved.
    Returns ``(I, u_next, info)``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ConfigurationError(f"empty multiplier bracket [{lo}, {hi}]", key="bracket")
    u = np.asarray(u, dtype=float)
    n_eval = 0

    def full(I: float) -> np.ndarray:
        nonlocal n_eval
        n_eval += 1
        return stepper(u, I, dt)

    u_lo = full(lo)
    f_lo = float(u_lo.min())
    u_hi = full(hi)
    f_hi = float(u_hi.min())
    first_hi = f_hi
    while f_hi < 0.0:
        if hi >= cap:
            if f_hi == f_lo and f_hi == first_hi:
                raise InfeasibleMultiplierError(
                    "step does not depend on the multiplier (flat constraint function)", "degenerate")
            raise InfeasibleMultiplierError(
                f"no non-negative multiplier achieves the constraint: min u_next({hi:g}) = {f_hi:.3e} < 0 "
                "(growth too strong)", "growth")
        new_hi = min(cap, lo + 2.0 * (hi - lo))
        lo, u_lo, f_lo = hi, u_hi, f_hi
        hi = new_hi
        u_hi = full(hi)
        f_hi = float(u_hi.min())
    if f_lo > 0.0:
        if f_lo == f_hi:
            raise InfeasibleMultiplierError(
                "step does not depend on the multiplier (flat constraint function)", "degenerate")
        raise InfeasibleMultiplierError(
            f"no non-negative multiplier achieves the constraint: min u_next({lo:g}) = {f_lo:.3e} > 0 "
            "(decay too strong)", "decay")
    if f_lo == 0.0:
        return lo, u_lo, RootInfo(0, 0.0, (lo, hi), n_eval)

    # nodes whose value at I=lo already exceeds min u_next(hi) never attain the minimum in [lo, hi]
    keep = np.flatnonzero(u_lo <= f_hi)

    def sub(I: float) -> float:
        nonlocal n_eval
        n_eval += 1
        return float(stepper(u, I, dt, keep).min())

    a, b, fa, fb = lo, hi, f_lo, f_hi
    iterations = 0
    while b - a > width:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = sub(mid)
        iterations += 1
        if fm >= 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    candidates = [(abs(fa), a), (abs(fb), b)]
    if fb != fa:
        s = a - fa * (b - a) / (fb - fa)
        if a < s < b:
            candidates.append((abs(sub(s)), s))
            iterations += 1
    _, I_root = min(candidates)
    u_next = full(I_root)
    residual = float(u_next.min())
    return I_root, u_next, RootInfo(iterations, residual, (lo, hi), n_eval)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    time: float
    dt: float
    I: float
    min_u_before: float
    min_u_after: float
    argmin_x: float
    bracket: tuple[float, float]
    iterations: int


@dataclass
class MultiplierPath:
    """Piecewise-constant multiplier: ``values[n]`` holds on ``[t_start[n], t_start[n] + dt[n])``."""

    t_start: np.ndarray
    dt: np.ndarray
    values: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray

    def __post_init__(self):
        self.t_start = np.asarray(self.t_start, dtype=float)
        self.dt = np.asarray(self.dt, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.iterations = np.asarray(self.iterations, dtype=int)
        self.residuals = np.asarray(self.residuals, dtype=float)

    @classmethod
    def empty(cls) -> "MultiplierPath":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0, dtype=int), np.zeros(0))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def t_end(self) -> np.ndarray:
        return self.t_start + self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return self.t_start + 0.5 * self.dt

    @property
    def T(self) -> float:
        return float(self.t_end[-1]) if len(self) else 0.0

    def value_at(self, t) -> np.ndarray:
        """Right-continuous evaluation; times at or past the end return the last value."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.t_start, t, side="right") - 1
        return self.values[np.clip(idx, 0, len(self) - 1)]

    def bv(self, t0: float = 0.0, t1: float | None = None) -> float:
        t1 = self.T if t1 is None else t1
        mask = (self.t_start >= t0 - 1e-14) & (self.t_start < t1 - 1e-14)
        return bv_seminorm(self.values[mask]) if mask.sum() >= 2 else 0.0

    def to_csv(self, path: str | Path) -> None:
        write_csv(path, ["t", "I", "residual", "iterations"],
                  np.column_stack([self.midpoints, self.values, self.residuals, self.iterations]))


def bv_seminorm(samples) -> float:
    """Total variation ``sum |s_{k+1} - s_k|`` of a sequence (norms for vector samples)."""
    arr = np.asarray(samples, dtype=float)
    if arr.shape[0] < 2:
        raise ValueError("bv_seminorm needs at least two samples")
    diffs = np.diff(arr, axis=0)
    if diffs.ndim == 1:
        return float(np.abs(diffs).sum())
    return float(np.linalg.norm(diffs.reshape(len(diffs), -1), axis=1).sum())


def l1_distance(p1: MultiplierPath, p2: MultiplierPath, t0: float = 0.0, t1: float | None = None) -> float:
    """Exact ``L1(t0, t1)`` distance between two piecewise-constant paths."""
    if t1 is None:
        t1 = min(p1.T, p2.T)
    if t1 <= t0:
        return 0.0
    knots = np.union1d(np.concatenate([p1.t_start, p2.t_start, [t0, t1]]), [])
    knots = knots[(knots >= t0) & (knots <= t1)]
    left = knots[:-1]
    widths = np.diff(knots)
    return float(np.sum(np.abs(p1.value_at(left) - p2.value_at(left)) * widths))


# ---------------------------------------------------------------------------
# time loop
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    """Everything the time loop needs, independent of the route."""

    model: ModelSpec
    grid: GridSpec
    g: Callable[[np.ndarray], np.ndarray]
    T: float
    bracket: tuple[float, float] = (0.0, 10.0)
    cap: float = 1e4
    tol_constraint: float = 1e-8
    snapshot_times: Sequence[float] = ()
    boundary_cells: int = 5
    name: str = "scenario"

    def initial_values(self) -> np.ndarray:
        return np.asarray(self.g(self.grid.nodes), dtype=float)

    def signature(self) -> dict:
        return {"name": self.name, "model": self.model.describe(), "T": self.T,
                "bracket": list(self.bracket)}


class Route(Protocol):
    name: str

    def step(self, u: np.ndarray, I: float, dt: float, nodes: np.ndarray | None = None) -> np.ndarray: ...

    def choose_dt(self, u: np.ndarray, I_prev: float, first: bool) -> float: ...

    def accept(self, u: np.ndarray, I: float, dt: float, t: float, u_next: np.ndarray) -> None: ...

    def metadata(self) -> dict: ...


@dataclass
class RunResult:
    route: str
    problem: Problem
    snapshots: list[Field]
    path: MultiplierPath
    records: list[StepRecord]
    history: list[np.ndarray] = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def grid(self) -> GridSpec:
        return self.problem.grid

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    @property
    def max_dt(self) -> float:
        return float(self.path.dt.max()) if len(self.path) else 0.0

    def snapshot_at(self, t: float) -> Field:
        times = np.array([s.time for s in self.snapshots])
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[k]

    def summary(self) -> dict:
        p = self.path
        return {
            "route": self.route,
            "scenario": self.problem.name,
            "steps": len(p),
            "T": self.problem.T,
            "grid": {"lo": self.grid.lo, "hi": self.grid.hi, "n_cells": self.grid.n_cells},
            "I_first": float(p.values[0]) if len(p) else None,
            "I_last": float(p.values[-1]) if len(p) else None,
            "I_bv": p.bv() if len(p) >= 2 else 0.0,
            "max_residual": float(np.abs(p.residuals).max()) if len(p) else 0.0,
            "max_dt": self.max_dt,
            **self.metadata,
        }

    def write_summary(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True))


def _snapshot_schedule(problem: Problem) -> np.ndarray:
    times = np.asarray(sorted(set(float(t) for t in problem.snapshot_times) | {float(problem.T)}))
    if np.any(times < 0) or np.any(times > problem.T + 1e-12):
        raise ConfigurationError("snapshot times must lie in [0, T]", key="snapshots")
    return times[times > 0]


def run(problem: Problem, route: Route, keep_history: bool = False) -> RunResult:
    """March ``problem`` to ``T`` with ``route``, enforcing ``min u = 0`` every step."""
    grid = problem.grid
    u = problem.initial_values()
    if abs(u.min()) > 1e-8:
        raise ConfigurationError(f"min g on the grid is {u.min():.3e}, expected 0", key="g")
    nodes = grid.nodes
    snapshots = [Field(grid, u.copy(), 0.0)]
    schedule = list(_snapshot_schedule(problem))
    t = 0.0
    I_prev = 0.5 * (problem.bracket[0] + problem.bracket[1])
    rows: list[tuple] = []
    records: list[StepRecord] = []
    history: list[np.ndarray] = []
    eps_t = 1e-12 * max(1.0, problem.T)
    while schedule and t < problem.T - eps_t:
        dt = route.choose_dt(u, I_prev, first=not rows)
        target = schedule[0]
        hit = t + dt > target - eps_t
        if hit:
            dt = min(dt, target - t)
        try:
            I, u_next, info = solve_multiplier_step(
                route.step, u, dt, problem.bracket, problem.tol_constraint, problem.cap)
        except InfeasibleMultiplierError as exc:
            raise InfeasibleMultiplierError(str(exc), exc.reason, time=t) from exc
        except ConstrainedHJError as exc:
            exc.time = t
            log.error("%s route failed at t=%.6g: %s", route.name, t, exc)
            raise
        if abs(info.residual) > problem.tol_constraint:
            log.warning("t=%.6g: constraint residual %.3e above tolerance", t, info.residual)
        k = int(np.argmin(u_next))
        if k < problem.boundary_cells or k > grid.n_cells - problem.boundary_cells:
            raise BoundaryProximityError(
                f"t={t + dt:.6g}: argmin x={nodes[k]:.6g} within {problem.boundary_cells} cells of the boundary")
        if keep_history:
            history.append(u.copy())
        route.accept(u, I, dt, t, u_next)
        records.append(StepRecord(t, dt, I, float(u.min()), info.residual, float(nodes[k]),
                                  info.bracket, info.iterations))
        rows.append((t, dt, I, info.iterations, info.residual))
        t = t + dt
        u = u_next
        I_prev = I
        if hit:
            t = target
            snapshots.append(Field(grid, u.copy(), t))
            schedule.pop(0)
    if rows:
        arr = np.array(rows, dtype=float)
        path = MultiplierPath(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(int), arr[:, 4])
    else:
        path = MultiplierPath.empty()
    if keep_history:
        history.append(u.copy())
    return RunResult(route.name, problem, snapshots, path, records, history,
                     metadata=route.metadata())


def detect_jumps(path: MultiplierPath, factor: float = 10.0, floor: float = 1e-9) -> list[float]:
    """Times of jumps: increments above ``factor`` times a baseline increment.

    The baseline is the median of the non-trivial increments (above
    ``floor``) other than the largest one, and ``floor`` when no other is
    left, so a path that is constant apart from one jump still reports it.
    Runs of consecutive flagged increments count as one jump, located at the
    largest increment of the run.
    """
    if len(path) < 3:
        return []
    inc = np.abs(np.diff(path.values))
    nonzero = np.sort(inc[inc > floor])
    if nonzero.size == 0:
        return []
    baseline = max(float(np.median(nonzero[:-1])), floor) if nonzero.size > 1 else floor
    flagged = np.flatnonzero(inc > factor * baseline)
    times: list[float] = []
    start = 0
    while start < flagged.size:
        stop = start
        while stop + 1 < flagged.size and flagged[stop + 1] == flagged[stop] + 1:
            stop += 1
        group = flagged[start:stop + 1]
        k = int(group[np.argmax(inc[group])])
        times.append(float(path.t_start[k + 1]))
        start = stop + 1
    return times
