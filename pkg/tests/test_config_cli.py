from __future__ import annotations

import json

import numpy as np
import pytest

from constrained_hj.cli import build_setup, main, run_scenario
from constrained_hj.config import load_config, parse_config, scenario_config
from constrained_hj.errors import ConfigurationError

MINIMAL = "name: q\nmodel: quadratic\ng: quadratic-well\nT: 0.5\n"
SMALL = """\
scenario: quadratic
grid:
  n_cells: 200
sl:
  n_steps: 100
snapshots: 4
trajectories:
  count: 6
assumptions:
  n: 16
"""


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid["n_cells"] == 800
        assert cfg.routes == ["fd", "sl"]
        assert cfg.bracket == (0.0, 10.0)
        assert cfg.tol_constraint == 1e-8
        assert cfg.snapshots == pytest.approx(np.linspace(0.0, 0.5, 11))

    def test_offset_is_shifted_away(self):
        cfg = parse_config(MINIMAL.replace("g: quadratic-well", "g:\n  kind: quadratic-well\n  offset: 0.3"))
        st = build_setup(cfg, refine=0.25)
        assert st.shift == pytest.approx(0.3)
        assert st.g(st.grid.nodes).min() == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("value", ["-1", "0"])
    def test_non_positive_T(self, value):
        with pytest.raises(ConfigurationError) as info:
            parse_config(MINIMAL.replace("T: 0.5", f"T: {value}"))
        assert info.value.key == "T"
        assert info.value.line == 4

    def test_unknown_key_with_line(self):
        with pytest.raises(ConfigurationError) as info:
            parse_config(MINIMAL + "grid:\n  n_cels: 100\n")
        assert info.value.key == "grid.n_cels"
        assert info.value.line == 6

    def test_type_mismatch(self):
        with pytest.raises(ConfigurationError) as info:
            parse_config(MINIMAL.replace("T: 0.5", "T: soon"))
        assert info.value.key == "T"

    @pytest.mark.parametrize("text, key", [
        ("routes: [fd, magic]\n", "routes"),
        ("eps: [0.1, 2.0]\n", "eps"),
        ("bracket: [5, 1]\n", "bracket"),
        ("grid:\n  n_cells: 10\n", "grid.n_cells"),
        ("fd:\n  scheme: weno\n", "fd.scheme"),
    ])
    def test_invalid_values(self, text, key):
        with pytest.raises(ConfigurationError) as info:
            parse_config(MINIMAL + text)
        assert info.value.key == key

    def test_missing_model(self):
        with pytest.raises(ConfigurationError) as info:
            parse_config("name: q\ng: quadratic-well\nT: 1\n")
        assert info.value.key == "model"

    def test_unknown_scenario(self):
        with pytest.raises(ConfigurationError):
            parse_config("scenario: nowhere\n")

    def test_registered_preset(self):
        cfg = scenario_config("jump")
        assert cfg.g["kind"] == "double-well"
        assert cfg.smooth is False

    def test_relative_paths(self, tmp_path):
        (tmp_path / "c.yaml").write_text(MINIMAL + "output_dir: results\n")
        assert load_config(tmp_path / "c.yaml").output_dir == str(tmp_path / "results")


@pytest.fixture(scope="module")
def small_runs(tmp_path_factory):
    out = []
    for k in range(2):
        d = tmp_path_factory.mktemp(f"run{k}")
        out.append((d, run_scenario(parse_config(SMALL), d)))
    return out


class TestRunScenario:
    def test_exit_zero_and_files(self, small_runs):
        out, (status, report) = small_runs[0]
        assert status == 0
        for name in report["files"].values():
            assert (out / name).is_file()
        assert {"u_fd", "u_sl", "I_fd", "I_sl", "trajectories_sl", "diagnostics", "report"} <= set(report["files"])
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["passed"]
        assert all(e["status"] != "fail" for e in diag["entries"])
        assert report["tolerances"]["tol_constraint"] == 1e-8
        assert set(report["versions"]) >= {"numpy", "scipy", "python"}

    def test_multiplier_is_one(self, small_runs):
        out = small_runs[0][0]
        data = np.loadtxt(out / "I_fd.csv", delimiter=",", skiprows=1)
        assert np.max(np.abs(data[:, 1] - 1.0)) <= 1e-2

    def test_byte_identical(self, small_runs):
        (a, _), (b, _) = small_runs
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_assumption_gate(self, tmp_path):
        text = MINIMAL.replace("model: quadratic", "model:\n  kind: quadratic\n  rate:\n    kappa: 0")
        status, report = run_scenario(parse_config(text + "assumptions:\n  n: 8\n"), tmp_path)
        assert status == 2
        assert report["status"] == "assumption-gate"
        assert "L2" in report["assumptions"]["hard_failures"]
        assert sorted(p.name for p in tmp_path.iterdir()) == ["report.json"]


class TestMain:
    def test_runs_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(SMALL + "routes: [fd]\n")
        assert main([str(cfg), "-o", str(tmp_path / "out"), "--refine", "0.5"]) == 0
        assert "quadratic: ok" in capsys.readouterr().out
        assert (tmp_path / "out" / "u_fd.csv").is_file()

    def test_configuration_error(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(MINIMAL.replace("T: 0.5", "T: -2"))
        assert main([str(cfg)]) == 2
        assert "key 'T'" in capsys.readouterr().err

    def test_bad_routes(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(MINIMAL)
        assert main([str(cfg), "--routes", "fd,teleport"]) == 2
