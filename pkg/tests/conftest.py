import numpy as np
import pytest

from bregfix import _kernels as K


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) every jitted kernel before timing anything."""
    K.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
