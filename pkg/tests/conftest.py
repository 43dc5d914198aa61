import numpy as np
import pytest

from gapminimax.dirac.basis import RadialBasis
from gapminimax.dirac.channel import assemble_channel
from gapminimax.forms import FormPair, SplitSpace

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_by_two():
    return FormPair(np.eye(2), np.diag([1.0, -1.0]), np.array([[0.0, 0.5], [0.5, 0.0]]),
                    SplitSpace.leading(2, 1))


@pytest.fixture(scope="session")
def channel_m1():
    return assemble_channel(RadialBasis(), -1)


@pytest.fixture(scope="session")
def channel_p1():
    return assemble_channel(RadialBasis(), 1)
