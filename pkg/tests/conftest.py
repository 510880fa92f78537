import numpy as np
import pytest

from strongdrive.model import QubitParams


@pytest.fixture(scope="session")
def params():
    return QubitParams()


@pytest.fixture(scope="session")
def delta(params):
    return params.delta


@pytest.fixture()
def rng():
    return np.random.default_rng(424242)
