from __future__ import annotations

import json

import numpy as np
import pytest

from constrained_hj.diagnostics import (
    CheckEntry,
    DiagnosticsReport,
    check_pessimization,
    compare_runs,
    lower_bound_check,
    phi_weights,
)
from constrained_hj.errors import ConfigurationError
from constrained_hj.sl_route import backtrack_trajectory


class TestPessimization:
    def test_reversed_pair(self):
        entry = check_pessimization([1.0, 0.5], tol=1e-8)
        assert entry.passed is False
        assert entry.witness["step"] == 1
        assert entry.value == pytest.approx(0.5)

    def test_not_applicable(self):
        assert check_pessimization([1.0, 0.5], 1e-8, applicable=False).status == "n/a"

    def test_within_tolerance(self):
        assert check_pessimization([1.0, 1.0 - 1e-9, 2.0], tol=2e-8).passed

    @pytest.mark.parametrize("name", ["quadratic", "moving-optimum"])
    def test_scenarios(self, runs, name):
        for route in ("fd", "sl"):
            assert check_pessimization(runs.get(name, route).path, 2.0 * (1e-10 + 1e-8)).passed

    @pytest.mark.parametrize("route", ["fd", "sl"])
    def test_moving_optimum_strictly_increasing(self, runs, route):
        # while the argmin rests on one node I is pinned by R(I, node) = 0: a staircase
        values = runs.get("moving-optimum", route).path.values
        changes = np.diff(values)
        levels = values[np.concatenate([[True], np.abs(changes) > 1e-8])]
        assert np.all(np.diff(levels) > 0)
        assert len(levels) >= 20


class TestCompareRuns:
    def test_identical_runs(self, runs):
        res = runs.get("quadratic", "fd")
        entries = {e.name.split(":")[1]: e for e in compare_runs(res, res)}
        assert entries["I_l1"].value == 0.0
        assert entries["u_core_sup"].value == 0.0
        assert all(e.passed for e in entries.values())

    def test_quadratic_routes_agree(self, runs):
        entries = compare_runs(runs.get("quadratic", "fd"), runs.get("quadratic", "sl"))
        assert all(e.passed for e in entries)
        assert entries[0].value <= 5e-2 * 0.5

    def test_jump_alignment(self, runs):
        entries = compare_runs(runs.get("jump", "fd"), runs.get("jump", "sl"))
        align = [e for e in entries if e.name.endswith("jump_alignment")][0]
        assert align.passed
        assert len(align.witness["jumps_1"]) == 1

    def test_different_scenarios(self, runs):
        with pytest.raises(ConfigurationError):
            compare_runs(runs.get("quadratic", "fd"), runs.get("jump", "fd"))


class TestPhi:
    def test_quadratic_is_one(self, runs):
        res = runs.get("quadratic", "sl")
        tr = backtrack_trajectory(res, 0.5, 0.7)
        phi, lam = phi_weights(tr, res.path, runs.get("quadratic", "fd").path, res.problem.model)
        np.testing.assert_allclose(phi, 1.0, atol=1e-12)
        assert lam == pytest.approx(1.0, abs=1e-12)

    def test_equal_paths_reduce_to_derivative(self, runs):
        res = runs.get("kernel-gaussian", "sl")
        model = res.problem.model
        tr = backtrack_trajectory(res, 0.5, 0.4)
        phi, _ = phi_weights(tr, res.path, res.path, model)
        mid = tr.s[:-1] + 0.5 * tr.dt
        expected = model.L_I(res.path.value_at(mid), tr.gamma[1:], tr.v)
        np.testing.assert_allclose(phi, expected, rtol=1e-12)

    def test_constant_paths(self, runs):
        res = runs.get("jump", "sl")
        tr = backtrack_trajectory(res, 0.5, -0.5)
        phi, lam = phi_weights(tr, 1.0, 3.0, res.problem.model)
        assert lam > 0


class TestLowerBound:
    @pytest.mark.parametrize("name", ["quadratic", "moving-optimum", "jump", "kernel-gaussian"])
    def test_passes(self, runs, name):
        st = runs.setup(name)
        assert lower_bound_check(runs.get(name, "fd"), st.g, st.grid.lower_bound_C).passed

    def test_initial_time_is_exact(self, runs):
        st = runs.setup("jump")
        res = runs.get("jump", "fd")
        res0 = type(res)(res.route, res.problem, res.snapshots[:1], res.path, res.records)
        entry = lower_bound_check(res0, st.g, st.grid.lower_bound_C)
        assert entry.passed
        assert entry.witness["t"] == 0.0

    def test_halved_constant_still_holds_on_quadratic(self, runs):
        st = runs.setup("quadratic")
        assert lower_bound_check(runs.get("quadratic", "fd"), st.g, 0.5 * st.grid.lower_bound_C).passed

    def test_without_slack_fails_far_and_late(self, runs):
        st = runs.setup("moving-optimum")
        entry = lower_bound_check(runs.get("moving-optimum", "fd"), st.g, 0.0)
        assert entry.passed is False
        assert entry.witness["t"] == pytest.approx(st.config.T)
        assert abs(entry.witness["x"]) >= 1.0


class TestReport:
    def test_json(self, tmp_path):
        rep = DiagnosticsReport()
        rep.add(CheckEntry("a", True, 1.0, 0.5))
        rep.add([CheckEntry("b", None, 0.0), CheckEntry("c", False, 1.0, np.float64(2.0), {"x": np.int64(3)})])
        assert [e.name for e in rep.failures] == ["c"]
        assert not rep.passed
        rep.to_json(tmp_path / "d.json")
        data = json.loads((tmp_path / "d.json").read_text())
        assert [e["status"] for e in data["entries"]] == ["pass", "n/a", "fail"]
        assert data["entries"][2]["witness"] == {"x": 3}
