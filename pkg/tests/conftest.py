import numpy as np
import pytest

from smeared_space.grid import Field, Grid, normalize
from smeared_space.smearing import make_kernel


def random_smooth_state(grid: Grid, rng: np.random.Generator, max_terms: int = 3) -> Field:
    """Normalized superposition of a few Gaussian packets well inside ``grid``."""
    x = grid.points
    half = grid.extent / 2
    vals = np.zeros(grid.n, dtype=complex)
    for _ in range(int(rng.integers(1, max_terms + 1))):
        c = rng.uniform(-0.1, 0.1) * half
        w = rng.uniform(0.6, 2.0)
        k = rng.uniform(-1.5, 1.5)
        amp = rng.normal() + 1j * rng.normal()
        vals += amp * np.exp(-((x - c) ** 2) / (4 * w * w) + 1j * k * x)
    return normalize(Field(grid, vals))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid512():
    return Grid(512, 32.0)


@pytest.fixture(scope="session")
def small_grids():
    """A u lattice and a narrower v lattice with the same spacing."""
    return Grid(256, 32.0), Grid(128, 16.0)


@pytest.fixture(scope="session")
def gauss_kernel(grid512):
    return make_kernel("gaussian", 0.5, 0.1, grid512)


#: One summary line per acceptance criterion, filled by ``test_acceptance.py``.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
