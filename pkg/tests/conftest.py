import zlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from momentspec import CircleGrid

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid():
    return CircleGrid(2048)


@pytest.fixture
def rng(request):
    # a per-test seed keeps tests independent of execution order
    seed = zlib.crc32(request.node.nodeid.encode())
    return np.random.default_rng(seed)
