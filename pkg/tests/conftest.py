import numpy as np
import pytest

from slidekit.design import build_welding_fixture


@pytest.fixture(scope="session")
def welding():
    return build_welding_fixture()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
