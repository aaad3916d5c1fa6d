import numpy as np
import pytest

from mfgpi.grid import PeriodicGrid
from mfgpi.presets import builtin_coupling, builtin_potential
from mfgpi.stationary import StationaryProblem


def smooth_random_potential(grid, rng, modes=3):
    """Random trigonometric polynomial in the first coordinate(s)."""
    v = np.zeros(grid.size)
    for d in range(grid.dim):
        x = grid.coords[:, d]
        for k in range(1, modes + 1):
            a, b = rng.normal(size=2) / k
            v += a * np.sin(2 * np.pi * k * x) + b * np.cos(2 * np.pi * k * x)
    return v


def l2_distance(a, b, grid):
    return float(np.sqrt(grid.cell_volume * np.sum((a - b) ** 2)))


@pytest.fixture
def paper_1d_problem():
    def make(nodes=200):
        g = PeriodicGrid(1, nodes)
        return StationaryProblem(g, 0.3, builtin_potential("paper-1d", g), builtin_coupling("square"))

    return make


@pytest.fixture
def constant_problem():
    g = PeriodicGrid(1, 16)
    return StationaryProblem(g, 0.3, np.zeros(g.size), builtin_coupling("square"))


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
