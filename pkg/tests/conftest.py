import numpy as np
import pytest

from frdo.feature_net import seeded_test_network


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_net():
    return seeded_test_network(0, width=8)


def smooth_image(rng, h, w):
    """Random image with some spatial correlation (closer to natural content than noise)."""
    base = rng.normal(0, 25, (h, w)).cumsum(axis=0).cumsum(axis=1) / 6
    base += rng.normal(0, 6, (h, w))
    base -= base.mean()
    return np.clip(128 + base, 0, 255).astype(np.uint8)
