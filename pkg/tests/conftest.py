import numpy as np
import pytest

from degindex.fem1d import Discretization


@pytest.fixture(scope="session")
def disc100():
    return Discretization(100)


@pytest.fixture(scope="session")
def disc200():
    return Discretization(200)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
