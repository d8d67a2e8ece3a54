"""Theorem-level checks on finished runs.

Every check returns a :class:`CheckEntry` that names its tolerance and the
worst witness found.  ``passed`` is ``None`` when a check does not apply.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError
from .grid import locate_argmin, lower_bound_profile
from .model import ModelSpec
from .multiplier import MultiplierPath, RunResult, detect_jumps, l1_distance
from .sl_route import Trajectory

GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)
THETA_NODES = 0.5 * (GAUSS_NODES + 1.0)
THETA_WEIGHTS = 0.5 * GAUSS_WEIGHTS


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class CheckEntry:
    name: str
    passed: bool | None
    tolerance: float
    value: float = 0.0
    witness: dict = field(default_factory=dict)
    note: str = ""

    @property
    def status(self) -> str:
        return "n/a" if self.passed is None else ("pass" if self.passed else "fail")

    def as_dict(self) -> dict:
        return _plain({"name": self.name, "status": self.status, "tolerance": self.tolerance,
                       "value": self.value, "witness": self.witness, "note": self.note})


@dataclass
class DiagnosticsReport:
    entries: list[CheckEntry] = field(default_factory=list)

    def add(self, entry: CheckEntry | Sequence[CheckEntry]) -> None:
        if isinstance(entry, CheckEntry):
            self.entries.append(entry)
        else:
            self.entries.extend(entry)

    @property
    def failures(self) -> list[CheckEntry]:
        return [e for e in self.entries if e.passed is False]

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"passed": self.passed, "entries": [e.as_dict() for e in self.entries]}

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------


def check_pessimization(path: MultiplierPath | Sequence[float], tol: float,
                        applicable: bool = True) -> CheckEntry:
    """``I_{n+1} >= I_n - tol`` for every step (only meaningful under (L5))."""
    name = "pessimization"
    if not applicable:
        return CheckEntry(name, None, tol, note="model failed the (L5) check")
    values = np.asarray(path.values if isinstance(path, MultiplierPath) else path, dtype=float)
    if values.size < 2:
        return CheckEntry(name, True, tol, note="fewer than two steps")
    drops = values[:-1] - values[1:]
    k = int(np.argmax(drops))
    worst = float(drops[k])
    return CheckEntry(name, worst <= tol, tol, worst,
                      {"step": k + 1, "I_before": values[k], "I_after": values[k + 1]},
                      "largest decrease of I between consecutive steps")


def _signature(run: RunResult) -> dict:
    return run.problem.signature()


def _core_sup(run1: RunResult, run2: RunResult, center: float, radius: float) -> tuple[float, dict]:
    worst, witness = 0.0, {}
    times2 = np.array([s.time for s in run2.snapshots])
    for s1 in run1.snapshots:
        k = int(np.argmin(np.abs(times2 - s1.time)))
        if abs(times2[k] - s1.time) > 1e-9 * max(1.0, s1.time):
            continue
        s2 = run2.snapshots[k]
        x = s1.nodes[np.abs(s1.nodes - center) <= radius + 1e-12]
        diff = np.abs(np.interp(x, s1.nodes, s1.values) - np.interp(x, s2.nodes, s2.values))
        j = int(np.argmax(diff))
        if diff[j] > worst:
            worst, witness = float(diff[j]), {"t": s1.time, "x": float(x[j])}
    return worst, witness


def compare_runs(run1: RunResult, run2: RunResult, core_radius: float = 1.0,
                 tol_I: float | None = None, tol_u: float = 2e-2) -> list[CheckEntry]:
    """Distances between two runs of the same scenario and alignment of their jumps."""
    if _signature(run1) != _signature(run2):
        raise ConfigurationError("compare_runs needs two runs of the same scenario")
    T = run1.problem.T
    tol_I = 5e-2 * T if tol_I is None else tol_I
    label = f"{run1.route}-vs-{run2.route}"
    d_I = l1_distance(run1.path, run2.path, 0.0, T)
    center = locate_argmin(run1.problem.g)
    d_u, where = _core_sup(run1, run2, center, core_radius)
    entries = [
        CheckEntry(f"{label}:I_l1", d_I <= tol_I, tol_I, d_I, {}, "L1(0,T) distance of the multipliers"),
        CheckEntry(f"{label}:u_core_sup", d_u <= tol_u, tol_u, d_u, where,
                   f"sup over common snapshots of |u1-u2| on |x-{center:g}|<={core_radius:g}"),
    ]
    j1, j2 = detect_jumps(run1.path), detect_jumps(run2.path)
    tol_j = 2.0 * max(run1.max_dt, run2.max_dt)
    gaps = [min((abs(a - b) for b in j2), default=np.inf) for a in j1]
    gaps += [min((abs(b - a) for a in j1), default=np.inf) for b in j2]
    worst = float(max(gaps)) if gaps else 0.0
    entries.append(CheckEntry(f"{label}:jump_alignment", bool(len(j1) == len(j2) and worst <= tol_j), tol_j,
                              worst, {"jumps_1": j1, "jumps_2": j2},
                              "each detected jump within 2*max(dt) of a jump of the other run"))
    return entries


def _path_values(path, s: np.ndarray) -> np.ndarray:
    if isinstance(path, MultiplierPath):
        return path.value_at(s)
    if callable(path):
        return np.asarray(path(s), dtype=float)
    return np.broadcast_to(np.asarray(path, dtype=float), s.shape)


def phi_weights(traj: Trajectory, I1, I2, model: ModelSpec) -> tuple[np.ndarray, float]:
    """``phi(s) = int_0^1 dL/dI((1-th) I1 + th I2, gamma, gamma_dot) d th`` by 16-point Gauss-Legendre.

    Samples sit at interval midpoints; ``gamma`` is taken at the interval's
    arrival point, matching the discrete action.
    """
    s = traj.s[:-1] + 0.5 * np.diff(traj.s)
    a = _path_values(I1, s)
    b = _path_values(I2, s)
    I = (1.0 - THETA_NODES[:, None]) * a[None, :] + THETA_NODES[:, None] * b[None, :]
    vals = model.L_I(I, traj.gamma[None, 1:], traj.v[None, :])
    phi = THETA_WEIGHTS @ vals
    return phi, float(phi.min()) if phi.size else float("nan")


def lower_bound_check(run: RunResult, g: Callable, C: float, tol_constraint: float = 1e-8) -> CheckEntry:
    """``u(t, x) >= min{|x - x0|/2, min_{|x' - x0| >= |x - x0|/2} g} - C t - tol`` at every snapshot node."""
    grid = run.grid
    x = grid.nodes
    x0 = locate_argmin(g)
    reach = 2.0 * float(np.max(np.abs(x - x0))) + 10.0
    base = lower_bound_profile(g, x0, x - x0, reach)
    worst, witness = np.inf, {}
    for snap in run.snapshots:
        margin = snap.values - (base - C * snap.time - tol_constraint)
        k = int(np.argmin(margin))
        if margin[k] < worst:
            worst, witness = float(margin[k]), {"t": snap.time, "x": float(x[k]), "u": float(snap.values[k])}
    return CheckEntry("lemma3_lower_bound", bool(worst >= 0.0), tol_constraint, worst, witness,
                      f"smallest u - bound over snapshot nodes, C={C:.6g}")


def velocity_bv_constant(trajs: Sequence[Trajectory], path: MultiplierPath) -> tuple[float, np.ndarray]:
    """Fitted ``C = max bv(gamma_dot) / (t + [I]_BV(0, t))`` over the trajectories."""
    ratios = []
    for tr in trajs:
        t = tr.t
        scale = t + (path.bv(0.0, t) if len(path) >= 2 else 0.0)
        ratios.append(tr.bv_of_velocity / scale if scale > 0 else 0.0)
    ratios = np.asarray(ratios)
    return float(ratios.max()) if ratios.size else 0.0, ratios


def mean_speed_constant(trajs: Sequence[Trajectory]) -> float:
    """``max (1/t) sum |gamma_dot| dt`` over the trajectories."""
    return float(max((tr.mean_speed for tr in trajs), default=0.0))
