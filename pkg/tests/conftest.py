import pytest

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Shared registry of one-line acceptance results (echoed at exit)."""
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
