"""Command-line entry point: run a scenario, emit CSV/JSON artifacts."""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from .config import ROUTES, ScenarioConfig, load_config
from .diagnostics import (
    CheckEntry,
    DiagnosticsReport,
    check_pessimization,
    compare_runs,
    lower_bound_check,
    mean_speed_constant,
    phi_weights,
    velocity_bv_constant,
)
from .epsilon_model import convergence_table, write_convergence_csv
from .errors import ConfigurationError, ConstrainedHJError
from .fd_route import NumericalHamiltonian, run_fd
from .grid import GridSpec, locate_argmin, lemma_constant, truncate_domain, write_csv
from .model import AssumptionBox, AssumptionReport, ModelSpec, check_assumptions
from .multiplier import Problem, RunResult
from .scenarios import Shifted, TabulatedData, build_g, build_model
from .sl_route import Trajectory, backtrack_trajectory, euler_lagrange_residual, run_sl

log = logging.getLogger("constrained_hj")


@dataclass
class Setup:
    """Objects derived from a config: model, normalised data, grid, problem."""

    config: ScenarioConfig
    model: ModelSpec
    g: Callable
    shift: float
    grid: GridSpec
    problem: Problem
    psi: Callable | None
    refine: float

    @property
    def sl_steps(self) -> int:
        return max(1, int(round(self.config.sl_n_steps * self.refine)))


def build_setup(cfg: ScenarioConfig, refine: float = 1.0) -> Setup:
    model = build_model(cfg.model)
    raw = build_g(cfg.g)
    x0 = locate_argmin(raw)
    shift = float(raw(np.array([x0]))[0])
    g = Shifted(raw, shift)
    n_cells = int(round(cfg.grid["n_cells"] * refine))
    if "lo" in cfg.grid:
        lo, hi = float(cfg.grid["lo"]), float(cfg.grid["hi"])
        C = lemma_constant(model, cfg.bracket, lo, hi)
        grid = GridSpec(lo, hi, n_cells, lower_bound_C=C)
    else:
        grid = truncate_domain(g, model, cfg.T, safety=cfg.grid.get("safety", 1.0),
                               margin=cfg.grid.get("margin", 1.0), n_cells=n_cells, I_interval=cfg.bracket)
    # the grid need not contain the exact minimiser; renormalise on the nodes
    on_grid = float(np.min(g(grid.nodes)))
    if abs(on_grid) > 0.0:
        shift += on_grid
        g = Shifted(raw, shift)
    problem = Problem(model, grid, g, cfg.T, bracket=cfg.bracket, tol_constraint=cfg.tol_constraint,
                      snapshot_times=cfg.snapshots, name=cfg.name)
    psi = None
    if "path" in cfg.psi:
        from .model import load_table
        psi = TabulatedData(*load_table(cfg.psi["path"]))
    elif cfg.psi.get("value", 1.0) != 1.0:
        c = float(cfg.psi["value"])
        psi = lambda x, c=c: np.full(np.shape(x), c)  # noqa: E731
    return Setup(cfg, model, g, shift, grid, problem, psi, refine)


def assumption_report(setup: Setup) -> AssumptionReport:
    grid = setup.grid
    box = AssumptionBox(I_interval=setup.config.bracket, x_center=grid.center,
                        x_radius=0.5 * (grid.hi - grid.lo), v_radius=setup.config.v_radius)
    return check_assumptions(setup.model, box, n=setup.config.assumption_n)


def endpoints(setup: Setup) -> np.ndarray:
    cfg = setup.config
    x0 = locate_argmin(setup.g)
    return np.linspace(x0 - cfg.trajectory_radius, x0 + cfg.trajectory_radius, cfg.trajectory_count)


def trajectories(run: RunResult, setup: Setup) -> list[Trajectory]:
    return [backtrack_trajectory(run, setup.config.T, x) for x in endpoints(setup)]


# ---------------------------------------------------------------------------


def _snapshot_table(run: RunResult) -> tuple[list[str], np.ndarray]:
    header = ["x"] + [f"u(t={s.time:.10g})" for s in run.snapshots]
    return header, np.column_stack([run.grid.nodes] + [s.values for s in run.snapshots])


def _traj_rows(trajs: list[Trajectory], xs: np.ndarray) -> np.ndarray:
    rows = []
    for i, tr in enumerate(trajs):
        v = np.append(tr.v, tr.v[-1] if len(tr.v) else np.nan)
        rows.append(np.column_stack([np.full(len(tr.s), i), np.full(len(tr.s), xs[i]), tr.s, tr.gamma, v]))
    return np.vstack(rows) if rows else np.zeros((0, 5))


def run_scenario(cfg: ScenarioConfig, output_dir: str | Path | None = None, refine: float = 1.0,
                 routes: list[str] | None = None) -> tuple[int, dict]:
    """Execute the configured routes and diagnostics; returns ``(exit_status, report)``."""
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    routes = [r for r in (routes or cfg.routes) if r in ROUTES]
    setup = build_setup(cfg, refine)
    files: dict[str, str] = {}
    report: dict = {
        "scenario": cfg.name,
        "config": cfg.as_dict(),
        "refine": refine,
        "routes": routes,
        "g_shift": setup.shift,
        "grid": {"lo": setup.grid.lo, "hi": setup.grid.hi, "n_cells": setup.grid.n_cells, "h": setup.grid.h,
                 "lower_bound_C": setup.grid.lower_bound_C},
        "tolerances": {"tol_constraint": cfg.tol_constraint, "tol_dual": cfg.tol_dual,
                       "tol_action": cfg.tol_action, "el_factor": cfg.el_factor},
        "versions": _versions(),
        "files": files,
    }
    status = 0

    def emit(key: str, name: str) -> Path:
        files[key] = name
        return out / name

    assumptions = assumption_report(setup)
    report["assumptions"] = assumptions.as_dict()
    if assumptions.hard_failures:
        report["status"] = "assumption-gate"
        report["errors"] = [f"assumption {k} failed" for k in assumptions.hard_failures]
        _write_report(out, report, emit)
        return 2, report

    diag = DiagnosticsReport()
    runs: dict[str, RunResult] = {}
    errors: list[str] = []
    l5 = assumptions.passed("L5")
    pess_tol = 2.0 * (1e-10 + cfg.tol_constraint)
    for route in [r for r in routes if r != "eps"]:
        try:
            if route == "fd":
                res = run_fd(setup.problem, NumericalHamiltonian(cfg.fd_scheme), cfg.fd_cfl)
            else:
                res = run_sl(setup.problem, n_steps=setup.sl_steps)
        except ConstrainedHJError as exc:
            errors.append(f"{route}: {type(exc).__name__}: {exc}")
            log.error("route %s failed: %s", route, exc)
            continue
        runs[route] = res
        write_csv(emit(f"u_{route}", f"u_{route}.csv"), *_snapshot_table(res))
        res.path.to_csv(emit(f"I_{route}", f"I_{route}.csv"))
        entry = check_pessimization(res.path, pess_tol, applicable=l5)
        entry.name = f"{route}:{entry.name}"
        diag.add(entry)
        lb = lower_bound_check(res, setup.g, setup.grid.lower_bound_C, cfg.tol_constraint)
        lb.name = f"{route}:{lb.name}"
        diag.add(lb)
        resid = float(np.abs(res.path.residuals).max()) if len(res.path) else 0.0
        diag.add(CheckEntry(f"{route}:constraint_residual", resid <= cfg.tol_constraint, cfg.tol_constraint, resid))

    if "sl" in runs:
        _sl_diagnostics(runs["sl"], runs.get("fd"), setup, diag, emit)
    if "fd" in runs and "sl" in runs:
        diag.add(compare_runs(runs["fd"], runs["sl"]))

    if "eps" in routes:
        reference = runs.get("fd") or runs.get("sl")
        if reference is None:
            errors.append("eps: needs an fd or sl reference run")
        else:
            try:
                eps_runs: dict = {}
                rows = convergence_table(setup.problem, cfg.eps, reference, setup.psi, runs=eps_runs)
            except ConstrainedHJError as exc:
                errors.append(f"eps: {type(exc).__name__}: {exc}")
            else:
                write_convergence_csv(rows, emit("eps_convergence", "eps_convergence.csv"))
                for eps, res in eps_runs.items():
                    res.to_csv(emit(f"I_eps_{eps:g}", f"I_eps_{eps:g}.csv"))
                    pos = float(res.path.values.min())
                    diag.add(CheckEntry(f"eps={eps:g}:I_positive", pos > 0, 0.0, pos))
                report["eps_convergence"] = [r.as_dict() for r in rows]
                if len(rows) >= 2:
                    i_l1 = [r.I_l1 for r in rows]
                    mins = [r.sup_min_u for r in rows]
                    diag.add(CheckEntry("eps:I_l1_decreasing", bool(np.all(np.diff(i_l1) < 0)), 0.0,
                                        float(np.max(np.diff(i_l1))), {"values": i_l1}))
                    diag.add(CheckEntry("eps:sup_min_u_decreasing", bool(np.all(np.diff(mins) < 0)), 0.0,
                                        float(np.max(np.diff(mins))), {"values": mins}))

    report["runs"] = {k: r.summary() for k, r in runs.items()}
    report["errors"] = errors
    diag.to_json(emit("diagnostics", "diagnostics.json"))
    report["diagnostics"] = {"passed": diag.passed, "failures": [e.name for e in diag.failures]}
    if errors:
        status = 3
    elif not diag.passed:
        status = 1
    report["status"] = "ok" if status == 0 else ("route-error" if errors else "diagnostics-failed")
    _write_report(out, report, emit)
    return status, report


def _sl_diagnostics(sl: RunResult, fd: RunResult | None, setup: Setup, diag: DiagnosticsReport, emit) -> None:
    cfg = setup.config
    model = setup.model
    xs = endpoints(setup)
    trajs = [backtrack_trajectory(sl, cfg.T, x) for x in xs]
    write_csv(emit("trajectories_sl", "trajectories_sl.csv"), ["endpoint", "x_end", "s", "gamma", "gamma_dot"],
              _traj_rows(trajs, xs))
    dt = float(sl.path.dt.max())
    h = setup.grid.h
    tol_action = cfg.tol_action if cfg.tol_action is not None else 5.0 * (dt + h)
    gaps = np.array([abs(tr.action - tr.value) for tr in trajs])
    k = int(np.argmax(gaps))
    diag.add(CheckEntry("sl:action_consistency", bool(gaps[k] <= tol_action), tol_action, float(gaps[k]),
                        {"x_end": float(xs[k])}, "|trajectory action - u(T, x)|"))
    sat = int(sl.metadata.get("saturation_events", 0)) + sum(tr.saturated for tr in trajs)
    diag.add(CheckEntry("sl:velocity_saturation", sat == 0, 0.0, float(sat)))
    c_bv, _ = velocity_bv_constant(trajs, sl.path)
    diag.add(CheckEntry("sl:velocity_bv_constant", None, 0.0, c_bv, note="fitted C in bv(v) <= C (t + [I]_BV)"))
    diag.add(CheckEntry("sl:mean_speed_constant", None, 0.0, mean_speed_constant(trajs)))
    el_tol = cfg.el_factor * (dt + h)
    el = np.array([euler_lagrange_residual(tr, sl.path, model) for tr in trajs])
    k = int(np.argmax(el))
    diag.add(CheckEntry("sl:euler_lagrange", bool(el[k] <= el_tol), el_tol, float(el[k]), {"x_end": float(xs[k])},
                        "integrated discrete Euler-Lagrange defect"))
    phis = [phi_weights(tr, sl.path, fd.path if fd is not None else sl.path, model)[1] for tr in trajs]
    lam = float(min(phis))
    diag.add(CheckEntry("phi_min_positive", lam > 0, 0.0, lam, note="sampled minimum of the phi weights"))


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"package": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _write_report(out: Path, report: dict, emit) -> None:
    path = emit("report", "report.json")
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="constrained-hj", description=__doc__)
    parser.add_argument("config", help="scenario YAML file")
    parser.add_argument("-o", "--output-dir", help="override the configured output directory")
    parser.add_argument("--refine", type=float, default=1.0,
                        help="grid refinement multiplier (cells and SL steps scale by it)")
    parser.add_argument("--routes", help="comma-separated subset of fd,sl,eps")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        routes = None
        if args.routes:
            routes = [r.strip() for r in args.routes.split(",") if r.strip()]
            unknown = [r for r in routes if r not in ROUTES]
            if unknown:
                raise ConfigurationError(f"unknown routes {unknown}", key="--routes")
        if args.refine <= 0:
            raise ConfigurationError("must be positive", key="--refine")
        status, report = run_scenario(cfg, args.output_dir, args.refine, routes)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    print(f"{report['scenario']}: {report['status']} (exit {status})")
    for name in report.get("diagnostics", {}).get("failures", []):
        print(f"  failed: {name}")
    for err in report.get("errors", []):
        print(f"  error: {err}")
    return status


if __name__ == "__main__":
    sys.exit(main())
