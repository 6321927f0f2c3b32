import numpy as np
import pytest

from fnlslab.spectral import Grid, derive_params
from fnlslab.variational import compute_ground_state

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def p1():
    return derive_params(1, 0.8, 4.0)


@pytest.fixture(scope="session")
def p2():
    return derive_params(2, 0.75, 2.4)


@pytest.fixture(scope="session")
def gs1(p1):
    """Sobolev ground state at (d=1, s=0.8, alpha=4) on N=1024, L=32."""
    return compute_ground_state(p1, Grid(1, 1024, 32.0))


@pytest.fixture(scope="session")
def gs1_wide(p1):
    return compute_ground_state(p1, Grid(1, 4096, 128.0))


@pytest.fixture(scope="session")
def gs2(p2):
    return compute_ground_state(p2, Grid(2, 256, 32.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
