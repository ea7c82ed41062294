import numpy as np
import pytest

from kramers_spde import quartic


@pytest.fixture(scope="session")
def pot():
    return quartic()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
