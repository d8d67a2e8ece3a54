from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from constrained_hj.errors import BlowUpError, ConfigurationError, StepSizeError
from constrained_hj.fd_route import NumericalHamiltonian, fd_step, fd_update, godunov_flux
from constrained_hj.grid import Field, GridSpec
from constrained_hj.model import CallableRate, QuadraticModel, TraitRate

from oracles import kernel_stationary_I, riccati_a


def const_rate(c: float) -> QuadraticModel:
    return QuadraticModel(CallableRate(lambda I, x: c + 0.0 * np.asarray(x) - 0.0 * np.asarray(I),
                                       lambda I, x: 0.0 * np.asarray(x), lambda I, x: 0.0 * np.asarray(x)))


SCHEMES = [NumericalHamiltonian("upwind_convex"), NumericalHamiltonian("lax_friedrichs")]
X5 = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


class TestStep:
    @pytest.mark.parametrize("nh", SCHEMES, ids=lambda n: n.scheme)
    def test_constant_field(self, nh):
        grid = GridSpec(-1.0, 1.0, 64)
        u = Field(grid, np.full(grid.n_nodes, 0.7))
        out = fd_step(u, 0.3, 0.01, const_rate(0.0), nh)
        np.testing.assert_array_equal(out.values, u.values)

    def test_five_node_lax_friedrichs(self):
        # g = |x|, H = -1 + p^2, h = 1, dt = 0.1, dissipation 1.1 * max(|2a|, |2b|)
        # x = 0: a = -1, b = 1 -> H(0) - 0.5 * 2.2 * 2 = -3.2
        # x = +-1: a = b -> H(+-1) = 0; ends: one-sided Godunov H(+-1) = 0
        out = fd_update(np.abs(X5), 0.0, 0.1, const_rate(-1.0), SCHEMES[1], X5, 1.0, 0.0)
        np.testing.assert_allclose(out, [2.0, 1.0, 0.32, 1.0, 2.0], atol=1e-15)

    def test_five_node_godunov(self):
        # at x = 0 the interval [-1, 1] contains the minimiser p = 0: flux H(0) = -1
        out = fd_update(np.abs(X5), 0.0, 0.1, const_rate(-1.0), SCHEMES[0], X5, 1.0, 0.0)
        np.testing.assert_allclose(out, [2.0, 1.0, 0.1, 1.0, 2.0], atol=1e-15)

    def test_cfl_violation(self):
        grid = GridSpec(-1.0, 1.0, 64)
        u = Field(grid, grid.nodes**2)
        with pytest.raises(StepSizeError):
            fd_step(u, 0.0, 1.0, QuadraticModel())

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_blow_up(self):
        grid = GridSpec(-1.0, 1.0, 64)
        u = Field(grid, 1e200 * grid.nodes)
        with pytest.raises(BlowUpError):
            fd_step(u, 0.0, 1e-300, QuadraticModel())

    def test_unknown_scheme(self):
        with pytest.raises(ConfigurationError):
            NumericalHamiltonian("weno")


class TestFlux:
    @given(a=st.floats(-5, 5), b=st.floats(-5, 5), da=st.floats(0, 2), db=st.floats(0, 2))
    @settings(max_examples=200)
    def test_godunov_monotone(self, a, b, da, db):
        m = QuadraticModel()
        f = godunov_flux(m, 0.5, 0.3, a, b)
        assert godunov_flux(m, 0.5, 0.3, a + da, b) >= f - 1e-12
        assert godunov_flux(m, 0.5, 0.3, a, b + db) <= f + 1e-12

    @pytest.mark.parametrize("nh", SCHEMES, ids=lambda n: n.scheme)
    def test_consistency_first_order(self, nh):
        model = QuadraticModel()
        errs = []
        for n in (64, 128, 256):
            x = np.linspace(-1.0, 1.0, n + 1)
            h = x[1] - x[0]
            u = np.sin(2.0 * x)
            dt = 1.0
            flux = (u - fd_update(u, 0.4, dt, model, nh, x, h, 0.4)) / dt
            exact = model.H(0.4, x, 2.0 * np.cos(2.0 * x))
            errs.append(np.max(np.abs(flux - exact)[1:-1]))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates >= 0.9)


u_fields = arrays(float, 21, elements=st.floats(-1.0, 1.0))


@pytest.mark.parametrize("nh", SCHEMES, ids=lambda n: n.scheme)
@given(u=u_fields, i=st.integers(0, 20), bump=st.floats(1e-6, 0.5))
@settings(max_examples=100, deadline=None)
def test_single_node_perturbation_is_monotone(nh, u, i, bump):
    model = QuadraticModel(TraitRate(slope=0.3))
    x = np.linspace(-1.0, 1.0, 21)
    h = x[1] - x[0]
    up = u.copy()
    up[i] += bump
    # CFL on the larger of the two gradients, padded for LF
    grad = max(np.max(np.abs(np.diff(u))), np.max(np.abs(np.diff(up)))) / h
    dt = 0.4 * h / (1.1 * 2.0 * grad + 1e-12)
    base = fd_update(u, 0.5, dt, model, nh, x, h, 0.5)
    bumped = fd_update(up, 0.5, dt, model, nh, x, h, 0.5)
    assert np.all(bumped >= base - 1e-12)


class TestRuns:
    def test_quadratic_profile(self, runs):
        res = runs.get("quadratic", "fd")
        for snap in res.snapshots:
            core = np.abs(snap.nodes) <= 1.0
            err = np.max(np.abs(snap.values[core] - riccati_a(snap.time) * snap.nodes[core] ** 2))
            assert err <= 1e-2

    def test_kernel_stationary_multiplier(self, runs):
        res = runs.get("kernel-gaussian", "fd")
        assert np.max(np.abs(res.path.values - kernel_stationary_I())) <= 1e-2

    def test_moving_optimum_increasing(self, runs):
        p = runs.get("moving-optimum", "fd").path
        assert np.all(np.diff(p.values) >= -2e-8)
        assert p.values[0] == pytest.approx(1.0, abs=2e-2)
        assert p.values[-1] > 1.5

    @pytest.mark.parametrize("name", ["quadratic", "moving-optimum", "jump", "kernel-gaussian"])
    def test_lipschitz_grows_at_most_linearly(self, runs, name):
        res = runs.get(name, "fd")
        model = res.problem.model
        x = res.grid.nodes
        lip0 = np.max(np.abs(np.diff(res.snapshots[0].values))) / res.grid.h
        # along characteristics |dp/dt| = |H_x| <= sup |H_x| at the current slopes
        p = np.linspace(-lip0, lip0, 41)[:, None]
        k = float(np.max(np.abs(model.H_x(np.linspace(0.0, 10.0, 21)[:, None, None], x[None, None, :],
                                          p[None, :, :]))))
        for snap in res.snapshots[1:]:
            lip = np.max(np.abs(np.diff(snap.values))) / res.grid.h
            assert lip <= lip0 + k * snap.time + 1e-9
