import numpy as np
import pytest

from geoflow.liealg import algebra

SPECS = [("su", 2), ("su", 3), ("su", 4), ("so", 4), ("so", 5), ("sp", 2)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=SPECS, ids=lambda p: f"{p[0]}{p[1]}")
def spec(request):
    return algebra(*request.param)


@pytest.fixture
def su2():
    return algebra("su", 2)


@pytest.fixture
def su3():
    return algebra("su", 3)


@pytest.fixture
def sp2():
    return algebra("sp", 2)
