import math

import pytest

from pistar.bands import PolymerModel, polymer_threshold
from pistar.geometry import StarGeometry, build_star
from pistar.krein import SpectralProblem, find_eigenvalues


@pytest.fixture(scope="session")
def e0_unit():
    """Band bottom of the unit-spacing chain at zero coupling."""
    return polymer_threshold(PolymerModel(1.0, 0.0))


@pytest.fixture(scope="session")
def tripod_problem():
    g = StarGeometry(3, (2 * math.pi / 3, 2 * math.pi / 3), 1.0, 10)
    return SpectralProblem(build_star(g), 0.0)


@pytest.fixture(scope="session")
def tripod_spectrum(tripod_problem):
    return find_eigenvalues(tripod_problem)


# one line per acceptance criterion, filled by test_acceptance
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
