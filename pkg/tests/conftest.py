import numpy as np
import pytest

from porelife.material_point import ALSI7MG


@pytest.fixture
def material():
    return ALSI7MG


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
