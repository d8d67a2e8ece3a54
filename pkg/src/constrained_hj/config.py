"""Scenario configuration: YAML schema, validation with line numbers, defaults."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigurationError
from .scenarios import G_KINDS, MODEL_KINDS, REGISTRY, registry_entry

ROUTES = ("fd", "sl", "eps")

# allowed keys per section; ``None`` marks a free-form leaf
SCHEMA: dict[str, Any] = {
    "name": None,
    "scenario": None,
    "model": {
        "kind": None, "rate": {"base": None, "slope": None, "curvature": None, "center": None, "kappa": None},
        "birth": {"amp": None, "floor": None, "decay": None}, "death": {"base": None, "coef": None},
        "sigma": None, "table": None, "theta": {"coef": None, "power": None}, "c_theta": None, "symmetric": None,
    },
    "g": {"kind": None, "center": None, "offset": None, "separation": None, "right_height": None, "path": None},
    "psi": {"value": None, "path": None},
    "T": None,
    "grid": {"n_cells": None, "lo": None, "hi": None, "safety": None, "margin": None},
    "routes": None,
    "eps": None,
    "bracket": None,
    "tolerances": {"tol_constraint": None, "tol_dual": None, "tol_action": None, "el_factor": None},
    "fd": {"scheme": None, "cfl": None},
    "sl": {"n_steps": None},
    "snapshots": None,
    "trajectories": {"count": None, "radius": None},
    "assumptions": {"n": None, "v_radius": None},
    "output_dir": None,
}


@dataclass
class ScenarioConfig:
    """Validated, fully defaulted scenario description."""

    name: str
    model: dict
    g: dict
    T: float
    psi: dict = field(default_factory=lambda: {"value": 1.0})
    grid: dict = field(default_factory=dict)
    routes: list[str] = field(default_factory=lambda: ["fd", "sl"])
    eps: list[float] = field(default_factory=lambda: [0.1, 0.05, 0.025])
    bracket: tuple[float, float] = (0.0, 10.0)
    tol_constraint: float = 1e-8
    tol_dual: float = 1e-6
    tol_action: float | None = None
    el_factor: float = 10.0
    fd_scheme: str = "upwind_convex"
    fd_cfl: float = 0.4
    sl_n_steps: int = 400
    snapshots: list[float] = field(default_factory=list)
    trajectory_count: int = 20
    trajectory_radius: float = 1.0
    assumption_n: int = 64
    v_radius: float = 20.0
    output_dir: str = "out"
    smooth: bool = False

    def as_dict(self) -> dict:
        out = copy.deepcopy(self.__dict__)
        out["bracket"] = list(self.bracket)
        return out


def _lines(node: yaml.Node, prefix: str = "", out: dict | None = None) -> dict:
    """Map dotted keys to 1-based line numbers."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}{k.value}"
            out[key] = k.start_mark.line + 1
            _lines(v, key + ".", out)
    return out


def _check_keys(data: dict, schema: dict, lines: dict, prefix: str = "") -> None:
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if key not in schema:
            raise ConfigurationError("unknown key", key=dotted, line=lines.get(dotted))
        sub = schema[key]
        if isinstance(sub, dict) and isinstance(value, dict):
            _check_keys(value, sub, lines, dotted + ".")


def _number(data: dict, key: str, lines: dict, dotted: str | None = None, integer: bool = False):
    dotted = dotted or key
    value = data[key]
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if integer:
        ok = ok and float(value).is_integer()
    if not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigurationError(f"expected {kind}, got {value!r}", key=dotted, line=lines.get(dotted))
    return int(value) if integer else float(value)


def _section(data: dict, key: str, lines: dict) -> dict:
    value = data.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"expected a mapping, got {value!r}", key=key, line=lines.get(key))
    return value


def _numbers_in(section: dict, name: str, lines: dict) -> dict:
    return {k: _number(section, k, lines, f"{name}.{k}") for k in section}


def parse_config(text: str, base_dir: str | Path | None = None) -> ScenarioConfig:
    """Parse and validate a YAML scenario document."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigurationError(f"malformed document: {exc}", line=None if mark is None else mark.line + 1) from exc
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping")
    lines = _lines(node)
    _check_keys(data, SCHEMA, lines)

    preset: dict = {}
    if "scenario" in data:
        preset = copy.deepcopy(registry_entry(str(data["scenario"])))

    if "name" not in data:
        if not preset:
            raise ConfigurationError("missing required key", key="name")
        data["name"] = data["scenario"]
    name = str(data["name"])

    # model
    model = data.get("model", preset.get("model"))
    if model is None:
        raise ConfigurationError("missing required key", key="model")
    if isinstance(model, str):
        if model in REGISTRY:
            model = copy.deepcopy(REGISTRY[model]["model"])
        elif model in MODEL_KINDS:
            model = copy.deepcopy(REGISTRY["kernel-gaussian" if model == "kernel" else "quadratic"]["model"]) \
                if model != "custom-tabulated" else {"kind": model}
        else:
            raise ConfigurationError(f"unknown model {model!r}", key="model", line=lines.get("model"))
    elif isinstance(model, dict):
        model = copy.deepcopy(model)
        if "kind" not in model:
            raise ConfigurationError("missing required key", key="model.kind", line=lines.get("model"))
        if model["kind"] not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {model['kind']!r}", key="model.kind",
                                     line=lines.get("model.kind"))
        for sec in ("rate", "birth", "death", "theta"):
            if sec in model:
                model[sec] = _numbers_in(_section(model, sec, lines), f"model.{sec}", lines)
        for k in ("sigma", "c_theta"):
            if k in model:
                model[k] = _number(model, k, lines, f"model.{k}")
        if "table" in model:
            model["table"] = _resolve(model["table"], base_dir)
    else:
        raise ConfigurationError("expected a name or mapping", key="model", line=lines.get("model"))

    # initial data
    g = data.get("g", preset.get("g"))
    if g is None:
        raise ConfigurationError("missing required key", key="g")
    if isinstance(g, str):
        g = {"kind": g}
    elif not isinstance(g, dict) or "kind" not in g:
        raise ConfigurationError("expected a built-in name or a mapping with 'kind'", key="g", line=lines.get("g"))
    g = copy.deepcopy(g)
    if g["kind"] not in G_KINDS:
        raise ConfigurationError(f"unknown initial data {g['kind']!r}; expected one of {G_KINDS}",
                                 key="g.kind", line=lines.get("g.kind", lines.get("g")))
    for k in ("center", "offset", "separation", "right_height"):
        if k in g:
            g[k] = _number(g, k, lines, f"g.{k}")
    if "path" in g:
        g["path"] = _resolve(g["path"], base_dir)

    if "T" not in data and "T" not in preset:
        raise ConfigurationError("missing required key", key="T")
    T = _number(data, "T", lines) if "T" in data else float(preset["T"])
    if not T > 0:
        raise ConfigurationError(f"T must be positive, got {T}", key="T", line=lines.get("T"))

    cfg = ScenarioConfig(name=name, model=model, g=g, T=T, smooth=bool(preset.get("smooth", False)))

    psi = data.get("psi")
    if psi is not None:
        if isinstance(psi, (int, float)) and not isinstance(psi, bool):
            psi = {"value": float(psi)}
        elif isinstance(psi, dict):
            psi = dict(psi)
            if "path" in psi:
                psi["path"] = _resolve(psi["path"], base_dir)
            if "value" in psi:
                psi["value"] = _number(psi, "value", lines, "psi.value")
        else:
            raise ConfigurationError("expected a number or mapping", key="psi", line=lines.get("psi"))
        if "value" in psi and psi["value"] <= 0:
            raise ConfigurationError("psi must be positive", key="psi.value", line=lines.get("psi.value"))
        cfg.psi = psi

    grid = _section(data, "grid", lines)
    cfg.grid = {}
    for k in grid:
        cfg.grid[k] = _number(grid, k, lines, f"grid.{k}", integer=(k == "n_cells"))
    cfg.grid.setdefault("n_cells", 800)
    if cfg.grid["n_cells"] < 64:
        raise ConfigurationError("at least 64 cells required", key="grid.n_cells", line=lines.get("grid.n_cells"))
    if ("lo" in cfg.grid) != ("hi" in cfg.grid):
        raise ConfigurationError("grid.lo and grid.hi must be given together", key="grid", line=lines.get("grid"))

    if "routes" in data:
        routes = data["routes"]
        if not isinstance(routes, list) or not routes or any(r not in ROUTES for r in routes):
            raise ConfigurationError(f"expected a non-empty list drawn from {ROUTES}", key="routes",
                                     line=lines.get("routes"))
        cfg.routes = [r for r in ROUTES if r in routes]

    if "eps" in data:
        eps = data["eps"]
        eps = [eps] if isinstance(eps, (int, float)) else eps
        if not isinstance(eps, list) or not eps:
            raise ConfigurationError("expected a non-empty list of numbers", key="eps", line=lines.get("eps"))
        for e in eps:
            if isinstance(e, bool) or not isinstance(e, (int, float)) or not 0.0 < e <= 1.0:
                raise ConfigurationError(f"eps values must lie in (0, 1], got {e!r}", key="eps",
                                         line=lines.get("eps"))
        cfg.eps = [float(e) for e in eps]

    if "bracket" in data:
        br = data["bracket"]
        if (not isinstance(br, list) or len(br) != 2
                or any(isinstance(b, bool) or not isinstance(b, (int, float)) for b in br) or not br[1] > br[0]):
            raise ConfigurationError("expected [I_min, I_max] with I_min < I_max", key="bracket",
                                     line=lines.get("bracket"))
        cfg.bracket = (float(br[0]), float(br[1]))

    tol = _section(data, "tolerances", lines)
    for k in tol:
        if tol[k] is None and k == "tol_action":
            continue
        value = _number(tol, k, lines, f"tolerances.{k}")
        if value <= 0:
            raise ConfigurationError("must be positive", key=f"tolerances.{k}", line=lines.get(f"tolerances.{k}"))
        setattr(cfg, k, value)

    fd = _section(data, "fd", lines)
    if "scheme" in fd:
        if fd["scheme"] not in ("upwind_convex", "lax_friedrichs"):
            raise ConfigurationError(f"unknown scheme {fd['scheme']!r}", key="fd.scheme",
                                     line=lines.get("fd.scheme"))
        cfg.fd_scheme = fd["scheme"]
    if "cfl" in fd:
        cfg.fd_cfl = _number(fd, "cfl", lines, "fd.cfl")
        if not 0 < cfg.fd_cfl <= 1:
            raise ConfigurationError("CFL number must lie in (0, 1]", key="fd.cfl", line=lines.get("fd.cfl"))

    sl = _section(data, "sl", lines)
    if "n_steps" in sl:
        cfg.sl_n_steps = _number(sl, "n_steps", lines, "sl.n_steps", integer=True)
        if cfg.sl_n_steps < 1:
            raise ConfigurationError("must be >= 1", key="sl.n_steps", line=lines.get("sl.n_steps"))

    snaps = data.get("snapshots", 10)
    if isinstance(snaps, int) and not isinstance(snaps, bool):
        if snaps < 1:
            raise ConfigurationError("snapshot count must be >= 1", key="snapshots", line=lines.get("snapshots"))
        cfg.snapshots = [float(t) for t in np.linspace(0.0, T, snaps + 1)]
    elif isinstance(snaps, list):
        if any(isinstance(s, bool) or not isinstance(s, (int, float)) or not 0 <= s <= T for s in snaps):
            raise ConfigurationError("snapshot times must lie in [0, T]", key="snapshots",
                                     line=lines.get("snapshots"))
        cfg.snapshots = sorted(float(s) for s in snaps)
    else:
        raise ConfigurationError("expected a count or a list of times", key="snapshots",
                                 line=lines.get("snapshots"))

    tr = _section(data, "trajectories", lines)
    if "count" in tr:
        cfg.trajectory_count = _number(tr, "count", lines, "trajectories.count", integer=True)
    if "radius" in tr:
        cfg.trajectory_radius = _number(tr, "radius", lines, "trajectories.radius")

    asm = _section(data, "assumptions", lines)
    if "n" in asm:
        cfg.assumption_n = _number(asm, "n", lines, "assumptions.n", integer=True)
    if "v_radius" in asm:
        cfg.v_radius = _number(asm, "v_radius", lines, "assumptions.v_radius")

    if "output_dir" in data:
        cfg.output_dir = _resolve(data["output_dir"], base_dir)
    return cfg


def _resolve(path: str, base_dir) -> str:
    p = Path(str(path))
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    return str(p)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def scenario_config(name: str, **overrides) -> ScenarioConfig:
    """Config for a registered scenario with keyword overrides of config attributes."""
    cfg = parse_config(f"scenario: {name}\n")
    for k, v in overrides.items():
        if not hasattr(cfg, k):
            raise ConfigurationError("unknown override", key=k)
        setattr(cfg, k, v)
    return cfg
