import numpy as np
import pytest

from utils import random_measure
from wasserstein_viscosity.discrete_measure import validate_measure


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def measure_factory(rng):
    """random_measure 绑定到固定种子的发生器"""
    def make(dim=2, max_atoms=5, scale=1.0, **kwargs):
        return random_measure(rng, dim=dim, max_atoms=max_atoms, scale=scale, **kwargs)
    return make


@pytest.fixture
def two_point():
    """0.5 delta_0 + 0.5 delta_1"""
    return validate_measure([[0.0], [1.0]], [0.5, 0.5])
