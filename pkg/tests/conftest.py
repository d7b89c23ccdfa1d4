import numpy as np
import pytest

from csanet.autodiff import precision


@pytest.fixture
def f64():
    """Run a test in 64-bit mode (oracle and gradient comparisons)."""
    with precision("float64"):
        yield


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
