import numpy as np
import pytest

from dias.env import Domain

ACCEPTANCE_LINES = []


@pytest.fixture
def domain():
    return Domain(10.0, 10.0, 50, 50)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: property-based invariant suites")
