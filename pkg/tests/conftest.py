import numpy as np
import pytest

from uhdgof.nulldist import default_law


@pytest.fixture(scope="session")
def law():
    """Shared null-law instance; node construction is paid once."""
    law = default_law()
    law.cdf(0.5)
    return law


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
