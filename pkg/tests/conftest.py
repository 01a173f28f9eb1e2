import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from becdephase import Bath, load_preset, standard_3d

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def std():
    return standard_3d()


@pytest.fixture(scope="session")
def condensate(std):
    return Bath(std)


@pytest.fixture(scope="session")
def free(std):
    return Bath(std, interacting=False)


@pytest.fixture(scope="session")
def condensate_1d():
    return Bath(load_preset("standard-1d"))


@pytest.fixture(scope="session")
def free_1d():
    return Bath(load_preset("standard-1d"), interacting=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
