import numpy as np
import pytest

_LINES = []


@pytest.fixture
def report():
    """Record a one-line verdict that is echoed in the terminal summary."""

    def _report(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        _LINES.append(line)
        print(line, flush=True)
        return ok

    return _report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
