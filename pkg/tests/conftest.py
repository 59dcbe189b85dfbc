import numpy as np
import pytest

from gupsim.dispersion import DispersionModel
from gupsim.packet import GaussianPacketSpec


@pytest.fixture
def free_model():
    return DispersionModel(alpha_prime=0.0)


@pytest.fixture
def narrow_spec():
    # sigma_k = k0 / 50 around k0 = 1
    return GaussianPacketSpec.from_sigma_k(1.0 / 50, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
