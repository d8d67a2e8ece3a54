from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from constrained_hj.errors import ConfigurationError, OutOfDomainError
from constrained_hj.grid import (
    Field,
    GridSpec,
    interp_values,
    interpolate,
    lemma_constant,
    locate_argmin,
    tail_min,
    truncate_domain,
)
from constrained_hj.model import QuadraticModel, TraitRate
from constrained_hj.scenarios import DoubleWell, QuadraticWell

GRID = GridSpec(-1.0, 1.0, 64)


class TestGridSpec:
    def test_geometry(self):
        assert GRID.h == pytest.approx(2.0 / 64)
        assert GRID.n_nodes == 65
        assert GRID.nodes[0] == -1.0 and GRID.nodes[-1] == 1.0
        assert GRID.center == 0.0

    @pytest.mark.parametrize("lo, hi, n", [(1.0, 1.0, 64), (2.0, -2.0, 64), (0.0, 1.0, 10)])
    def test_invalid(self, lo, hi, n):
        with pytest.raises(ConfigurationError):
            GridSpec(lo, hi, n)

    def test_refined(self):
        assert GRID.refined(2).n_cells == 128

    def test_field_shape_checked(self):
        with pytest.raises(ValueError):
            Field(GRID, np.zeros(10))


class TestInterpolation:
    def test_node_value(self):
        vals = np.arange(GRID.n_nodes, dtype=float) ** 2
        assert interpolate(Field(GRID, vals), GRID.nodes[17]) == 17.0**2

    def test_midpoint(self):
        vals = np.zeros(GRID.n_nodes)
        vals[11] = 2.0
        x = 0.5 * (GRID.nodes[10] + GRID.nodes[11])
        assert interpolate(Field(GRID, vals), x) == pytest.approx(1.0)

    def test_linear_field(self):
        fld = Field(GRID, 3.0 * GRID.nodes)
        x = np.linspace(-1.0, 1.0, 997)
        np.testing.assert_allclose(interpolate(fld, x), 3.0 * x, atol=1e-14)

    def test_outside(self):
        with pytest.raises(OutOfDomainError):
            interpolate(Field(GRID, GRID.nodes), 1.5)

    @given(a=st.floats(-50, 50), b=st.floats(-50, 50), x=st.floats(-1.0, 1.0))
    def test_affine_reproduction(self, a, b, x):
        vals = a + b * GRID.nodes
        assert interp_values(GRID, vals, x) == pytest.approx(a + b * x, abs=1e-10 * (1 + abs(a) + abs(b)))

    @given(vals=arrays(float, 65, elements=st.floats(-10, 10)), i=st.integers(0, 64),
           bump=st.floats(0.0, 5.0), x=st.floats(-1.0, 1.0))
    @settings(max_examples=200)
    def test_monotone_in_nodal_values(self, vals, i, bump, x):
        up = vals.copy()
        up[i] += bump
        assert interp_values(GRID, up, x) >= interp_values(GRID, vals, x) - 1e-12


class TestCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        fld = Field(GRID, rng.normal(size=GRID.n_nodes))
        fld.to_csv(tmp_path / "u.csv")
        back = Field.from_csv(tmp_path / "u.csv", GRID)
        np.testing.assert_array_equal(back.values, fld.values)


class TestArgminAndTails:
    def test_shifted_well(self):
        assert locate_argmin(QuadraticWell(center=3.0)) == pytest.approx(3.0, abs=1e-8)

    def test_double_well_picks_lower(self):
        assert locate_argmin(DoubleWell()) == pytest.approx(-1.0, abs=1e-6)

    def test_tail_min_of_parabola(self):
        g = QuadraticWell()
        assert tail_min(g, 0.0, 2.0, 10.0) == pytest.approx(4.0, abs=1e-12)

    def test_tail_min_double_well(self):
        # beyond distance 1.5 from -1 the right well (height 0.2) is reachable
        assert tail_min(DoubleWell(), -1.0, 1.5, 10.0) == pytest.approx(0.2, abs=1e-9)

    def test_lemma_constant(self):
        # C = 1 + sup R over I >= 0; sup R = 1 at I = 0, x = 0
        model = QuadraticModel(TraitRate())
        assert lemma_constant(model, (0.0, 10.0), -4.0, 4.0) == pytest.approx(2.0, abs=1e-9)


class TestTruncateDomain:
    MODEL = QuadraticModel(TraitRate(base=1.0, curvature=1.0, kappa=1.0))

    def test_quadratic_box(self):
        # smallest c on the 0.5-lattice with min(c/2, c^2/4) - 2 T >= 1 is c = 6
        grid = truncate_domain(QuadraticWell(), self.MODEL, T=1.0)
        assert (grid.lo, grid.hi) == (-6.0, 6.0)
        C = grid.lower_bound_C
        assert C == pytest.approx(2.0, abs=1e-9)
        assert grid.hi >= 2.0 * np.sqrt(C * 1.0)

    def test_recentred(self):
        grid = truncate_domain(QuadraticWell(center=3.0), self.MODEL, T=1.0)
        assert grid.center == pytest.approx(3.0)

    def test_non_coercive(self):
        with pytest.raises(ConfigurationError):
            truncate_domain(lambda x: np.tanh(np.asarray(x) ** 2), self.MODEL, T=1.0)

    def test_negative_time(self):
        with pytest.raises(ConfigurationError):
            truncate_domain(QuadraticWell(), self.MODEL, T=-1.0)

    def test_deterministic(self):
        a = truncate_domain(DoubleWell(), self.MODEL, T=0.5, safety=1.5)
        b = truncate_domain(DoubleWell(), self.MODEL, T=0.5, safety=1.5)
        assert (a.lo, a.hi, a.n_cells, a.lower_bound_C) == (b.lo, b.hi, b.n_cells, b.lower_bound_C)

    def test_safety_widens(self):
        a = truncate_domain(QuadraticWell(), self.MODEL, T=1.0)
        b = truncate_domain(QuadraticWell(), self.MODEL, T=1.0, safety=2.0)
        assert b.hi - b.lo >= 2.0 * (a.hi - a.lo) - 1e-12
