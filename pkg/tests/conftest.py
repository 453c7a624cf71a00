import pytest

from supmax.rng import RngPolicy

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def policy():
    return RngPolicy(2024)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
