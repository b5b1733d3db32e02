import numpy as np
import pytest

from kdvk.spectral import Field, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def grid_2pi():
    return make_grid(64, 2 * np.pi)


@pytest.fixture(scope="session")
def sech_grid():
    return make_grid(1024, 64 * np.pi)


def sech_field(grid, amplitude=1.0):
    return Field.from_physical(grid, amplitude / np.cosh(grid.x - grid.period / 2))


def random_real_field(grid, rng, decay=0.5):
    xi = grid.wavenumbers
    c = (rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)) * np.exp(-decay * np.abs(xi))
    c[grid.nyquist_index] = 0.0
    return Field.from_spectral(grid, c)


# criterion number -> (passed, detail), filled by test_acceptance.py
CRITERIA = {}


def record_criterion(number: int, title: str, passed: bool, detail: str):
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    CRITERIA[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
