"""Seeded Gaussian-mixture classification task shaped like small images."""
import numpy as np

from src.datasets.loader import ArrayDataset, DatasetSplits
from src.schemas.dataset_schema import DatasetSource


def make_mixture(source: DatasetSource):
    rng = np.random.default_rng(source.seed)
    dim = int(np.prod(source.image_shape))
    means = rng.normal(size=(source.num_classes, dim)) * source.separation

    def draw(n: int) -> ArrayDataset:
        labels = rng.integers(0, source.num_classes, size=n)
        x = means[labels] + source.noise * rng.normal(size=(n, dim))
        images = x.reshape((n,) + tuple(source.image_shape)).astype(np.float32)
        return ArrayDataset(images, labels.astype(np.int64), source.num_classes)

    return draw(source.train_size), draw(source.test_size)


def load(source: DatasetSource) -> DatasetSplits:
    train, test = make_mixture(source)
    return DatasetSplits(train, test)
