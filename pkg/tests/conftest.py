import numpy as np
import pytest

from src.core.tensor import get_tape
from src.datasets.loader import load_dataset
from src.models.lenet import build_lenet
from src.schemas.dataset_schema import DatasetSource


@pytest.fixture(autouse=True)
def fresh_tape():
    get_tape().reset()
    yield
    get_tape().reset()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_source():
    return DatasetSource(
        kind="synthetic", seed=7, num_classes=2, image_shape=[1, 4, 4],
        train_size=64, test_size=64, separation=1.0,
    )


@pytest.fixture
def tiny_splits(tiny_source):
    return load_dataset(tiny_source)


@pytest.fixture
def small_source():
    return DatasetSource(
        kind="synthetic", seed=3, num_classes=10, image_shape=[1, 8, 8],
        train_size=128, test_size=96, separation=1.0,
    )


@pytest.fixture
def small_splits(small_source):
    return load_dataset(small_source)


@pytest.fixture
def make_lenet():
    def factory(num_classes=10, image_size=8, width=4, seed=0, in_channels=1):
        return build_lenet(in_channels, image_size, num_classes, width, seed=seed)

    return factory
