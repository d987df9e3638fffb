import numpy as np
import pytest

from magimage import DigitalImage, MetricSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def l1():
    return MetricSpec(base="l1")


@pytest.fixture
def random_image(rng):
    return DigitalImage.from_array(rng.uniform(0.0, 1.0, (12, 14, 3)))
