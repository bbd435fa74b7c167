import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rectify import measures, nets


@pytest.fixture(scope="session")
def segment_mu():
    return measures.generate("segment", {"dim": 2}, n=400, seed=5)


@pytest.fixture(scope="session")
def segment_family(segment_mu):
    return nets.build_family(segment_mu, k0=0, k_max=8)


@pytest.fixture(scope="session")
def cantor_mu():
    return measures.generate("cantor4", {"depth": 5}, n=1, seed=0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
