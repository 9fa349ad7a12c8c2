"""
In-memory datasets, minibatch iteration and training-split augmentation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np

from src.core import config
from src.core.errors import ConfigError, DimensionError
from src.schemas.dataset_schema import DatasetKind, DatasetSource

logger = logging.getLogger(__name__)

CROP_PAD = 4


@dataclass
class ArrayDataset:
    images: np.ndarray  # float32, N×C×H×W
    labels: np.ndarray  # int64, N
    num_classes: int
    augment: bool = False

    def __post_init__(self):
        if self.images.ndim != 4:
            raise DimensionError(f"images must be N×C×H×W, got shape {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise DimensionError(f"{len(self.images)} images but {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, n: int) -> "ArrayDataset":
        return ArrayDataset(self.images[:n], self.labels[:n], self.num_classes, self.augment)

    def batches(
        self,
        batch_size: int,
        rng: Optional[np.random.Generator] = None,
    ) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Minibatches in a fixed order, or shuffled and augmented when rng is given."""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self), batch_size):
            idx = order[start:start + batch_size]
            images = self.images[idx]
            if self.augment and rng is not None:
                images = augment(images, rng)
            yield images, self.labels[idx]


def augment(images: np.ndarray, rng: np.random.Generator, pad: int = CROP_PAD) -> np.ndarray:
    """Random crop from a zero-padded copy, then random horizontal flip."""
    n, _, h, w = images.shape
    padded = np.pad(images, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dy = rng.integers(0, 2 * pad + 1, size=n)
    dx = rng.integers(0, 2 * pad + 1, size=n)
    flip = rng.random(n) < 0.5
    out = np.empty_like(images)
    for i in range(n):
        crop = padded[i, :, dy[i]:dy[i] + h, dx[i]:dx[i] + w]
        out[i] = crop[:, :, ::-1] if flip[i] else crop
    return out


def normalize(images: np.ndarray, mean, std) -> np.ndarray:
    """uint8 pixels to float32, scaled to [0, 1] then standardized per channel."""
    mean = np.asarray(mean, dtype=np.float32).reshape(1, -1, 1, 1)
    std = np.asarray(std, dtype=np.float32).reshape(1, -1, 1, 1)
    return ((images.astype(np.float32) / 255.0) - mean) / std


@dataclass
class DatasetSplits:
    train: ArrayDataset
    test: ArrayDataset

    @property
    def num_classes(self) -> int:
        return self.train.num_classes

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return self.train.image_shape


def data_root(source: DatasetSource) -> Path:
    root = source.path or config.DATA_DIR
    if not root:
        raise ConfigError(f"dataset '{source.kind.value}' needs data.path or TERN_DATA_DIR")
    return Path(root)


def load_dataset(source: DatasetSource) -> DatasetSplits:
    from src.datasets import cifar10, mnist, synthetic

    if source.kind == DatasetKind.SYNTHETIC:
        splits = synthetic.load(source)
    elif source.kind == DatasetKind.CIFAR10:
        splits = cifar10.load(data_root(source), normalized=source.normalize)
    elif source.kind == DatasetKind.MNIST:
        splits = mnist.load(data_root(source), normalized=source.normalize)
    else:
        raise ConfigError(f"unknown dataset kind '{source.kind}'")
    if source.limit:
        splits = DatasetSplits(splits.train.subset(source.limit), splits.test.subset(source.limit))
    splits.train.augment = source.augment
    splits.test.augment = False
    logger.info(
        f"loaded {source.kind.value}: {len(splits.train)} train / {len(splits.test)} test, "
        f"image shape {splits.image_shape}"
    )
    return splits


def dataset_geometry(source: DatasetSource) -> Tuple[Tuple[int, int, int], int]:
    """Image shape and class count of a source, without reading any file."""
    if source.kind == DatasetKind.CIFAR10:
        return (3, 32, 32), 10
    if source.kind == DatasetKind.MNIST:
        return (1, 28, 28), 10
    return tuple(source.image_shape), source.num_classes


def split_validation(
    dataset: ArrayDataset,
    fraction: float,
    seed: int = 0,
) -> Tuple[ArrayDataset, Optional[ArrayDataset]]:
    """Hold out a seeded random `fraction` of a training split; 0 keeps it whole and returns no validation set."""
    if fraction <= 0.0:
        return dataset, None
    n_val = max(1, int(round(len(dataset) * fraction)))
    if n_val >= len(dataset):
        raise ConfigError(f"validation fraction {fraction} leaves no training samples out of {len(dataset)}")
    order = np.random.default_rng(seed).permutation(len(dataset))
    val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
    train = ArrayDataset(dataset.images[train_idx], dataset.labels[train_idx], dataset.num_classes, dataset.augment)
    val = ArrayDataset(dataset.images[val_idx], dataset.labels[val_idx], dataset.num_classes)
    logger.info(f"held out {n_val} of {len(dataset)} training samples for validation")
    return train, val
