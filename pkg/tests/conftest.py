import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line ``(criterion, passed, detail)``."""
    def record(criterion, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}"
        _LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
