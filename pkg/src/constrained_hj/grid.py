"""Uniform 1-d grids, nodal fields, interpolation and domain truncation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, OutOfDomainError
from .model import ModelSpec

MIN_CELLS = 64


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[lo, hi]`` with ``n_cells`` cells (``n_cells + 1`` nodes)."""

    lo: float
    hi: float
    n_cells: int
    lower_bound_C: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigurationError(f"grid bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_cells < MIN_CELLS:
            raise ConfigurationError(f"grid needs at least {MIN_CELLS} cells, got {self.n_cells}")

    @property
    def dim(self) -> int:
        return 1

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_nodes)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def refined(self, factor: float) -> "GridSpec":
        return GridSpec(self.lo, self.hi, int(round(self.n_cells * factor)), self.lower_bound_C)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.lo), abs(self.hi))
        return (x >= self.lo - slack) & (x <= self.hi + slack)

    def nearest_index(self, x: float) -> int:
        return int(np.clip(np.rint((x - self.lo) / self.h), 0, self.n_cells))


@dataclass(frozen=True)
class Field:
    """Nodal values of ``u(t, .)`` on a grid."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_nodes,):
            raise ValueError(f"field has {vals.shape} values for {self.grid.n_nodes} nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def min(self) -> float:
        return float(self.values.min())

    def argmin(self) -> int:
        return int(np.argmin(self.values))

    def to_csv(self, path: str | Path) -> None:
        write_csv(path, ["x", "u"], np.column_stack([self.nodes, self.values]))

    @classmethod
    def from_csv(cls, path: str | Path, grid: GridSpec, time: float = 0.0) -> "Field":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(grid, data[:, 1], time)


def interp_values(grid: GridSpec, values: np.ndarray, x) -> np.ndarray:
    """Piecewise-linear interpolation of nodal ``values`` at ``x`` (array)."""
    x = np.asarray(x, dtype=float)
    inside = grid.contains(x)
    if not np.all(inside):
        bad = float(np.atleast_1d(x)[~np.atleast_1d(inside)][0])
        raise OutOfDomainError(f"x={bad!r} outside grid [{grid.lo}, {grid.hi}]")
    return np.interp(x, grid.nodes, values)


def interpolate(fld: Field, x) -> float | np.ndarray:
    """Value of the piecewise-linear interpolant of ``fld`` at ``x``."""
    out = interp_values(fld.grid, fld.values, x)
    return float(out) if np.ndim(out) == 0 else out


def write_csv(path: str | Path, header: list[str], rows: np.ndarray) -> None:
    """Comma-separated table with a header row and 17 significant digits."""
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.atleast_2d(rows):
            w.writerow([format(float(v), ".17g") for v in row])


# ---------------------------------------------------------------------------
# domain truncation
# ---------------------------------------------------------------------------


def locate_argmin(g: Callable, search: float = 50.0, n: int = 20001) -> float:
    """Global minimiser of ``g`` by dense sampling followed by a bounded polish."""
    xs = np.linspace(-search, search, n)
    vals = g(xs)
    k = int(np.argmin(vals))
    step = xs[1] - xs[0]
    res = minimize_scalar(g, bounds=(xs[k] - step, xs[k] + step), method="bounded",
                          options={"xatol": 1e-12})
    x0 = float(res.x) if res.fun <= vals[k] else float(xs[k])
    # snap to a tidy value so symmetric problems give symmetric boxes
    snapped = round(x0, 6)
    return snapped if g(np.array([snapped]))[0] <= g(np.array([x0]))[0] + 1e-12 else x0


def tail_min(g: Callable, x0: float, r: float, reach: float, n: int = 4001) -> float:
    """``min_{r <= |x - x0| <= reach} g(x)`` by sampling both sides."""
    s = np.linspace(r, max(reach, r), n)
    best = np.inf
    for sign in (1.0, -1.0):
        vals = g(x0 + sign * s)
        k = int(np.argmin(vals))
        best = min(best, float(vals[k]))
        if n > 1 and reach > r:
            # sampling overestimates a minimum; polish it
            lo, hi = s[max(k - 1, 0)], s[min(k + 1, n - 1)]
            res = minimize_scalar(lambda d: float(g(np.array([x0 + sign * d]))[0]), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-10})
            best = min(best, float(res.fun))
    return best


def check_coercive(g: Callable, x0: float, cap: float = 1e3) -> None:
    """Raise :class:`ConfigurationError` unless ``g`` keeps growing out to radius ``cap``."""
    m_far = tail_min(g, x0, cap, 2.0 * cap)
    m_mid = tail_min(g, x0, cap / 4.0, 2.0 * cap)
    g0 = float(g(np.array([x0]))[0])
    if not (np.isfinite(m_far) and m_far > m_mid + 1.0 and m_far > g0 + 1.0):
        raise ConfigurationError(
            f"initial data is not coercive: min g beyond radius {cap:g} is {m_far:.6g}, "
            f"beyond {cap / 4:g} it is {m_mid:.6g}"
        )


def lemma_constant(model: ModelSpec, I_interval: tuple[float, float], x_lo: float, x_hi: float,
                   n: int = 257) -> float:
    """``C = sup (|v| - L(I, x, v))`` over the box, evaluated as ``sup max(H(., 1), H(., -1))``."""
    I = np.linspace(I_interval[0], I_interval[1], n)[:, None]
    x = np.linspace(x_lo, x_hi, n)[None, :]
    best = -np.inf
    for p in (1.0, -1.0):
        vals = model.H(I, x, p)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        best = max(best, float(vals[i, j]))
        # polish in x at the best sampled I
        dx = (x_hi - x_lo) / (n - 1)
        res = minimize_scalar(lambda y: -float(model.H(I[i, 0], y, p)),
                              bounds=(max(x_lo, x[0, j] - dx), min(x_hi, x[0, j] + dx)), method="bounded")
        best = max(best, -float(res.fun))
    return max(best, 0.0)


def lower_bound_profile(g: Callable, x0: float, dist: np.ndarray, reach: float) -> np.ndarray:
    """``min{d/2, min_{|x'-x0| >= d/2} g(x')}`` for each distance ``d``."""
    dist = np.abs(np.asarray(dist, dtype=float))
    return np.array([min(0.5 * d, tail_min(g, x0, 0.5 * d, reach, 801)) for d in dist])


def truncate_domain(
    g: Callable,
    model: ModelSpec,
    T: float,
    safety: float = 1.0,
    margin: float = 1.0,
    n_cells: int = 800,
    I_interval: tuple[float, float] = (0.0, 10.0),
    step: float = 0.5,
    cap: float = 1e3,
    max_half_width: float = 200.0,
) -> GridSpec:
    """Smallest symmetric box around ``argmin g`` on which the a-priori lower bound
    ``min{c/2, min_{|x'-x0| >= c/2} g} - C T`` is at least ``margin`` at the edge.

    ``C`` is evaluated on the candidate box itself (it may grow with the box)
    and stored on the returned grid.  ``safety`` scales the half-width.
    """
    if T < 0:
        raise ConfigurationError("T must be non-negative", key="T")
    x0 = locate_argmin(g)
    check_coercive(g, x0, cap)
    c = step
    while c <= max_half_width:
        C = lemma_constant(model, I_interval, x0 - c, x0 + c)
        bound = min(0.5 * c, tail_min(g, x0, 0.5 * c, 2.0 * c + 10.0)) - C * T
        if bound >= margin:
            half = float(np.ceil(safety * c / step) * step)
            C = lemma_constant(model, I_interval, x0 - half, x0 + half)
            return GridSpec(x0 - half, x0 + half, n_cells, lower_bound_C=C)
        c += step
    raise ConfigurationError(f"no box of half-width <= {max_half_width} satisfies the lower-bound margin")
