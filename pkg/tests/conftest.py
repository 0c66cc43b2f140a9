import numpy as np
import pytest

from maskwfs.optics import ComplexField, Grid, default_grid, default_mask


@pytest.fixture
def grid():
    return default_grid()


@pytest.fixture
def mask(grid):
    return default_mask(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    return Grid(16, 16, 1e-6, 1e-6, 13.5e-9)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance")
        for line in sorted(mod.REPORT):
            terminalreporter.write_line(line)
