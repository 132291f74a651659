import math

import numpy as np
import pytest

from combqlogic.comb import CombSettings
from combqlogic.config import sio_plus_profile
from combqlogic.cooling import CoolingPhysics
from combqlogic.molecule import SIO_PLUS
from combqlogic.trapdyn import TrapSettings

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def sio():
    return SIO_PLUS


@pytest.fixture
def profile():
    return sio_plus_profile()


@pytest.fixture
def ideal_physics():
    """Profile drive strength, ideal cooling, no scattering."""
    return CoolingPhysics(
        SIO_PLUS,
        CombSettings(),
        TrapSettings(eta_override=0.1),
        omega0=2 * math.pi * 0.2e6,
        spont_override=0.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
