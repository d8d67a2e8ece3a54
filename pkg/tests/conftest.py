from __future__ import annotations

import time

import pytest

from constrained_hj.cli import Setup, build_setup
from constrained_hj.config import scenario_config
from constrained_hj.fd_route import NumericalHamiltonian, run_fd
from constrained_hj.multiplier import RunResult
from constrained_hj.sl_route import run_sl

ACCEPTANCE_LINES: list[str] = []


class RunCache:
    """Scenario runs shared across the session, keyed by (scenario, route, refine)."""

    def __init__(self):
        self._setups: dict[tuple[str, float], Setup] = {}
        self._runs: dict[tuple[str, str, float], RunResult] = {}
        self.seconds: dict[tuple[str, str, float], float] = {}

    def setup(self, name: str, refine: float = 1.0) -> Setup:
        key = (name, refine)
        if key not in self._setups:
            self._setups[key] = build_setup(scenario_config(name), refine)
        return self._setups[key]

    def get(self, name: str, route: str, refine: float = 1.0) -> RunResult:
        key = (name, route, refine)
        if key not in self._runs:
            st = self.setup(name, refine)
            start = time.perf_counter()
            if route == "fd":
                self._runs[key] = run_fd(st.problem, NumericalHamiltonian(st.config.fd_scheme), st.config.fd_cfl)
            elif route == "sl":
                self._runs[key] = run_sl(st.problem, n_steps=st.sl_steps)
            else:
                raise ValueError(route)
            self.seconds[key] = time.perf_counter() - start
        return self._runs[key]


@pytest.fixture(scope="session")
def runs() -> RunCache:
    return RunCache()


@pytest.fixture(scope="session")
def acceptance_log() -> list[str]:
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
