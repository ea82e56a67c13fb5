"""Shared fixtures: one production-size grid and basis for the whole session."""

import numpy as np
import pytest

from rydberg_bohm.basis import build_basis
from rydberg_bohm.grid import build_grid
from rydberg_bohm.packet import Wavefield, classical_period, gaussian_coefficients

N0 = 40
R_MAX = 7203.0  # max(5000, 3 n_max²) for the wider window n = 31..49
POINTS = 20000

# lines collected by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return build_grid(R_MAX, POINTS, "sqrt")


@pytest.fixture(scope="session")
def basis(grid):
    return build_basis(range(31, 50), 1, grid)


@pytest.fixture(scope="session")
def t_cl():
    return classical_period(N0)


@pytest.fixture(scope="session")
def coeffs_a():
    return gaussian_coefficients(N0, 0.75)


@pytest.fixture(scope="session")
def coeffs_b():
    return gaussian_coefficients(N0, 1.5)


@pytest.fixture(scope="session")
def wf_a(coeffs_a, basis):
    return Wavefield(coeffs_a, basis)


@pytest.fixture(scope="session")
def wf_b(coeffs_b, basis):
    return Wavefield(coeffs_b, basis)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
