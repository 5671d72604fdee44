import numpy as np
import pytest

from psidel import Ball, Stable
from psidel.solver import discretize, make_grid

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def stable1():
    return Stable(1)


@pytest.fixture(scope="session")
def disk():
    return Ball((0.0, 0.0), 1.0)


@pytest.fixture(scope="session")
def disk_op(stable1, disk):
    """Stable(1) on the unit disk at h = 0.1 (305 nodes): cheap and reused everywhere."""
    grid = make_grid(disk, 0.1)
    return discretize(stable1, grid)


@pytest.fixture(scope="session")
def interval_op(stable1):
    grid = make_grid(Ball((0.0,), 1.0), 0.025)
    return discretize(stable1, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {text}")
