import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def reference_config():
    from sdmqkd.config import load_reference_config

    return load_reference_config()


@pytest.fixture(scope="session")
def reference_topology():
    from sdmqkd.topology import build_paper_n6

    return build_paper_n6()
