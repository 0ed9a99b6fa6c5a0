import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from plateflow.grid import GridSpec

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def grid():
    return GridSpec(nx=16, ny=8, dt=0.01, t_end=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bump_eta(grid, amp=0.1, k=1, phase=0.0):
    """1 + amp sin(2 pi k x / L + phase) sin^2(pi x / L): clamped, positive for |amp| < 1."""
    x, L = grid.x_nodes, grid.L
    e = 1.0 + amp * np.sin(2 * np.pi * k * x / L + phase) * np.sin(np.pi * x / L) ** 2
    e[[0, -1]] = 1.0
    return e


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
