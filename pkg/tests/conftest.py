import numpy as np
import pytest

from absgrad import fixtures
from absgrad.models import LinearModel, QuadraticModel


@pytest.fixture(scope="session")
def tiny_cnn():
    return fixtures.load_tiny_cnn()


@pytest.fixture(scope="session")
def blob_samples():
    """All fixture images as (image (1,16,16), mask, class) tuples."""
    out = []
    for i in range(fixtures.NUM_IMAGES):
        image, mask, label = fixtures.blob_sample(i)
        out.append((image[None, :, :], mask, label))
    return out


@pytest.fixture
def quadratic_toy():
    rng = np.random.default_rng(5)
    return QuadraticModel(rng.uniform(-1, 1, size=(2, 1, 6, 6)))


@pytest.fixture
def linear_toy():
    rng = np.random.default_rng(9)
    return LinearModel(rng.normal(size=(2, 1, 6, 6)))
