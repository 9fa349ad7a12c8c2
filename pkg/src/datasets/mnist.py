"""
MNIST IDX files. Headers are big-endian: magic 0x00000803 + count, rows,
cols for images; magic 0x00000801 + count for labels. Gzipped copies
(`.gz`) are read transparently.
"""
import gzip
import struct
from pathlib import Path
from typing import Tuple

import numpy as np

from src.core.errors import DataIOError, ParseError
from src.datasets.loader import ArrayDataset, DatasetSplits, normalize

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
NUM_CLASSES = 10
MEAN = (0.1307,)
STD = (0.3081,)
SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def parse_idx_images(buf: bytes, source: str = "<buffer>") -> np.ndarray:
    if len(buf) < 16:
        raise ParseError(f"{source}: image header needs 16 bytes, file has {len(buf)}", offset=len(buf))
    magic, count, rows, cols = struct.unpack(">IIII", buf[:16])
    if magic != IMAGES_MAGIC:
        raise ParseError(f"{source}: bad image magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}", offset=0)
    expected = 16 + count * rows * cols
    if len(buf) != expected:
        raise ParseError(
            f"{source}: header claims {count}×{rows}×{cols} pixels ({expected} bytes), file has {len(buf)}",
            offset=min(len(buf), expected),
        )
    return np.frombuffer(buf, dtype=np.uint8, offset=16).reshape(count, 1, rows, cols)


def parse_idx_labels(buf: bytes, source: str = "<buffer>") -> np.ndarray:
    if len(buf) < 8:
        raise ParseError(f"{source}: label header needs 8 bytes, file has {len(buf)}", offset=len(buf))
    magic, count = struct.unpack(">II", buf[:8])
    if magic != LABELS_MAGIC:
        raise ParseError(f"{source}: bad label magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}", offset=0)
    if len(buf) != 8 + count:
        raise ParseError(f"{source}: header claims {count} labels, file has {len(buf) - 8}", offset=min(len(buf), 8 + count))
    labels = np.frombuffer(buf, dtype=np.uint8, offset=8).astype(np.int64)
    bad = np.flatnonzero(labels >= NUM_CLASSES)
    if bad.size:
        raise ParseError(f"{source}: label {labels[bad[0]]} out of range", offset=8 + int(bad[0]))
    return labels


def read_idx(path: Path) -> bytes:
    candidates = [path, path.with_name(path.name + ".gz")]
    for candidate in candidates:
        if candidate.exists():
            try:
                if candidate.suffix == ".gz":
                    with gzip.open(candidate, "rb") as fh:
                        return fh.read()
                return candidate.read_bytes()
            except (OSError, EOFError) as exc:
                raise DataIOError(f"cannot read {candidate}: {exc}")
    raise DataIOError(f"MNIST file not found: {path} (or {path.name}.gz)")


def read_split(root: Path, split: str) -> Tuple[np.ndarray, np.ndarray]:
    image_name, label_name = SPLIT_FILES[split]
    images = parse_idx_images(read_idx(root / image_name), source=image_name)
    labels = parse_idx_labels(read_idx(root / label_name), source=label_name)
    if len(images) != len(labels):
        raise ParseError(f"{split} split: {len(images)} images but {len(labels)} labels", offset=4)
    return images, labels


def load(root: Path, normalized: bool = True) -> DatasetSplits:
    splits = []
    for split in ("train", "test"):
        x, y = read_split(Path(root), split)
        x = normalize(x, MEAN, STD) if normalized else x.astype(np.float32) / 255.0
        splits.append(ArrayDataset(x, y, NUM_CLASSES))
    return DatasetSplits(*splits)
