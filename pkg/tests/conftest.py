import pytest

from mlpcm.traces import generate_trace

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def small_trace():
    return generate_trace((7, 3), length=1000, seed=5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
