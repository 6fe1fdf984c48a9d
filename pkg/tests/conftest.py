import warnings

import numpy as np
import pytest

import intdim as d


@pytest.fixture(autouse=True)
def _quiet_saturation_warnings():
    # Saturation warnings are informative for users; tests probe scales
    # deliberately, so keep the output clean.
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*covering sum saturates.*")
        yield


@pytest.fixture(scope="session")
def cantor_depth8():
    return d.generate_ifs_attractor(d.IfsSystem.cantor_middle_thirds(), 8)


@pytest.fixture(scope="session")
def interval_1024():
    return d.interval_grid(1024)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
