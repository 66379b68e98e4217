import sys
from pathlib import Path

import numpy as np
import pytest

from relureach.network import Layer, Network
from relureach.propspec import parse_property

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def absnet():
    """y = relu(x) + relu(-x) = |x|."""
    return Network(1, [Layer([[1.0], [-1.0]], [0.0, 0.0], "relu"), Layer([[1.0, 1.0]], [0.0], "linear")])


@pytest.fixture
def abs_reach():
    return parse_property("in[0] >= -1\nin[0] <= 1\nout[0] >= 0.5")


@pytest.fixture
def abs_unreach():
    return parse_property("in[0] >= -1\nin[0] <= 1\nout[0] >= 1.5")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.format_results():
        terminalreporter.write_line(line)
