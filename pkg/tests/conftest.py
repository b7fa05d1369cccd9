import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Collect one pass/fail line per acceptance criterion for the summary."""

    def record(number, passed, detail):
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
