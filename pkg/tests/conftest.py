import time

import pytest

from drumlab.geometry import CARDIOID_DENSITY, CubeDomain, EffectiveDensity, cardioid_map
from drumlab.solver import compute_spectrum

ACCEPTANCE_LINES: list[str] = []
SPECTRA_SECONDS: list[float] = []


@pytest.fixture(scope="session")
def cardioid_density():
    return EffectiveDensity(cardioid_map(1.0), CARDIOID_DENSITY, CubeDomain(2, 1.0))


@pytest.fixture(scope="session")
def cardioid_spectra(cardioid_density):
    """Dirichlet and Neumann cardioid spectra at cutoff 60 (about 15 s)."""
    start = time.perf_counter()
    rD = compute_spectrum(cardioid_density, "dirichlet", 60)
    rN = compute_spectrum(cardioid_density, "neumann", 60)
    SPECTRA_SECONDS.append(time.perf_counter() - start)
    return rD, rN


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
