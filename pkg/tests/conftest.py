import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rydladder.basis import enumerate_basis
from rydladder.lattice import build_lattice

settings.register_profile(
    "rydladder",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("rydladder")

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_basis(n_cols: int, n_legs: int = 2, pbc_x: bool = True, pbc_y: bool = True):
    return enumerate_basis(build_lattice(n_cols, n_legs, pbc_x, pbc_y))


@pytest.fixture(scope="session")
def basis_of():
    return cached_basis


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
