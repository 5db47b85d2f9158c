"""Shared fixtures and the acceptance summary printed at the end of a run."""
import pytest

ACCEPTANCE_LOG = []


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the pass flag so tests can assert on it."""

    def record(label, passed, detail):
        ACCEPTANCE_LOG.append((label, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
    failed = sum(1 for _, ok, _ in ACCEPTANCE_LOG if not ok)
    terminalreporter.write_line(f"{len(ACCEPTANCE_LOG) - failed} passed, {failed} failed")
