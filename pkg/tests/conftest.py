import numpy as np
import pytest

from fraclobc import Domain, GridFunction, assemble, make_grid


@pytest.fixture(scope="session")
def unit_domain():
    return Domain(0.0, 1.0)


@pytest.fixture(scope="session")
def sym_domain():
    return Domain(-1.0, 1.0)


@pytest.fixture(scope="session")
def op_unit_256(unit_domain):
    grid = make_grid(unit_domain, 256)
    return assemble(grid, 0.75)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


def getoor_profile(grid, s):
    return GridFunction(grid, (1 - grid.nodes**2) ** s)
