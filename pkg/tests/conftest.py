import numpy as np
import pytest

from mixdetect.orderstats import calibrate_alpha_n

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def calib64():
    return calibrate_alpha_n(64, 0.05, 200_000, 42)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def calib_psi2_512():
    # projected half of a 512-row sample
    return calibrate_alpha_n(256, 0.05, 200_000, 3)


@pytest.fixture(scope="session")
def calib_psi3_512_16():
    return calibrate_alpha_n(512, 0.05 / 32, 200_000, 4)


@pytest.fixture(scope="session")
def psi3_calibs_64():
    return {d: calibrate_alpha_n(64, 0.05 / (2 * d), 400_000, 5) for d in (2, 16, 64)}
