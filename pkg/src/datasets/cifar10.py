"""
CIFAR-10 binary version: records of 1 label byte + 3×32×32 pixel bytes
(channel-major, row-major), five training batches and one test batch.
"""
from pathlib import Path
from typing import Tuple

import numpy as np

from src.core.errors import DataIOError, ParseError
from src.datasets.loader import ArrayDataset, DatasetSplits, normalize

RECORD_BYTES = 3073
IMAGE_SHAPE = (3, 32, 32)
NUM_CLASSES = 10
TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
TEST_FILES = ("test_batch.bin",)
MEAN = (0.4914, 0.4822, 0.4465)
STD = (0.2470, 0.2435, 0.2616)


def parse_records(buf: bytes, source: str = "<buffer>") -> Tuple[np.ndarray, np.ndarray]:
    if len(buf) % RECORD_BYTES:
        whole = len(buf) // RECORD_BYTES
        raise ParseError(
            f"{source}: {len(buf)} bytes is not a whole number of {RECORD_BYTES}-byte records",
            offset=whole * RECORD_BYTES,
        )
    records = np.frombuffer(buf, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= NUM_CLASSES)
    if bad.size:
        raise ParseError(f"{source}: label {labels[bad[0]]} out of range", offset=int(bad[0]) * RECORD_BYTES)
    return records[:, 1:].reshape((-1,) + IMAGE_SHAPE), labels


def _batch_dir(root: Path) -> Path:
    nested = root / "cifar-10-batches-bin"
    return nested if nested.is_dir() else root


def read_batches(root: Path, names) -> Tuple[np.ndarray, np.ndarray]:
    images, labels = [], []
    for name in names:
        path = _batch_dir(root) / name
        try:
            buf = path.read_bytes()
        except OSError as exc:
            raise DataIOError(f"cannot read CIFAR-10 batch {path}: {exc.strerror or exc}")
        x, y = parse_records(buf, source=str(path))
        images.append(x)
        labels.append(y)
    return np.concatenate(images), np.concatenate(labels)


def load(root: Path, normalized: bool = True) -> DatasetSplits:
    splits = []
    for names in (TRAIN_FILES, TEST_FILES):
        x, y = read_batches(Path(root), names)
        x = normalize(x, MEAN, STD) if normalized else x.astype(np.float32) / 255.0
        splits.append(ArrayDataset(x, y, NUM_CLASSES))
    return DatasetSplits(*splits)
