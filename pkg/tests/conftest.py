import numpy as np
import pytest

from artifact import acceptance
from artifact import manifold as MF


@pytest.fixture(scope="session")
def fig8():
    return MF.load_shipped("fig8")


@pytest.fixture(scope="session")
def lifts(fig8):
    return MF.enumerate_spin_lifts(fig8)


@pytest.fixture(scope="session")
def spectra():
    """Cached figure-eight spectra: ``spectra(L, kind="psl")``."""
    return acceptance.fig8_spectrum


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
