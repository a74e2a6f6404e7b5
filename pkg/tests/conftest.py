import pytest

_REPORT_LINES = []


@pytest.fixture
def criterion_log():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    return _REPORT_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT_LINES, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
