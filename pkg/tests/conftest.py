"""Shared fixtures and the acceptance summary printed at the end of a run."""
import numpy as np
import pytest

_ACCEPTANCE_LINES = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "acceptance":
            _ACCEPTANCE_LINES.append(value)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def verdict(record_property):
    """Record a one-line PASS/FAIL verdict for the acceptance summary."""

    def _record(label: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        print(line)
        record_property("acceptance", line)
        return ok

    return _record


ACCEPTANCE_SEED = 2024
ACCEPTANCE_REPS = 20


@pytest.fixture(scope="session")
def scenario_runs():
    """hubnet vs lasso over 20 replicates of a scenario, computed once per kind."""
    from hubnet import harness
    from hubnet.simgen import ScenarioSpec

    cache = {}

    def get(kind):
        if kind not in cache:
            spec = ScenarioSpec(kind, n=100, p=500, s=10)
            table, reps = harness.compare(
                spec, ["hubnet", "lasso"], reps=ACCEPTANCE_REPS, seed=ACCEPTANCE_SEED, per_rep=True
            )
            cache[kind] = ({row.method: row for row in table}, reps)
        return cache[kind]

    return get
