from functools import lru_cache

import numpy as np
import pytest

from blindfactor.builder import shor_circuit
from blindfactor.partition import blind_pair, optimize


@lru_cache(maxsize=None)
def default_circuit(t):
    return shor_circuit(21, 4, t, 3)


@lru_cache(maxsize=None)
def default_partition(t):
    return optimize(default_circuit(t))


@lru_cache(maxsize=None)
def default_pair(t):
    return blind_pair(default_partition(t))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
