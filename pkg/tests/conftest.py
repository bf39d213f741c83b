import pytest

from ballstab.spectrum import ModelParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fig1_left():
    return ModelParams(3, 1.0, 30.0)


@pytest.fixture
def fig1_right():
    return ModelParams(3, 1.0, 4.0)


@pytest.fixture
def fig3():
    return ModelParams(6, 3.0, 30.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
