import gzip
import struct

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from src.core import config
from src.core.errors import ConfigError, DataIOError, DimensionError, ParseError
from src.datasets import cifar10, mnist
from src.datasets.loader import ArrayDataset, augment, dataset_geometry, load_dataset, normalize, split_validation
from src.schemas.dataset_schema import DatasetSource


def cifar_records(labels, rng):
    out = bytearray()
    for label in labels:
        out.append(label)
        out += rng.integers(0, 256, size=cifar10.RECORD_BYTES - 1, dtype=np.uint8).tobytes()
    return bytes(out)


def idx_images(count, rows=28, cols=28, magic=mnist.IMAGES_MAGIC, pixels=None):
    pixels = pixels if pixels is not None else bytes(count * rows * cols)
    return struct.pack(">IIII", magic, count, rows, cols) + pixels


def idx_labels(labels, magic=mnist.LABELS_MAGIC):
    return struct.pack(">II", magic, len(labels)) + bytes(labels)


@pytest.fixture
def cifar_root(tmp_path, rng):
    root = tmp_path / "cifar-10-batches-bin"
    root.mkdir()
    for i, name in enumerate(cifar10.TRAIN_FILES):
        (root / name).write_bytes(cifar_records([i, 9 - i, 3], rng))
    (root / cifar10.TEST_FILES[0]).write_bytes(cifar_records([7, 0], rng))
    return tmp_path


@pytest.fixture
def mnist_root(tmp_path):
    (tmp_path / "train-images-idx3-ubyte").write_bytes(idx_images(3, pixels=bytes(range(256)) * 9 + bytes(3 * 784 - 2304)))
    with gzip.open(tmp_path / "train-labels-idx1-ubyte.gz", "wb") as fh:
        fh.write(idx_labels([5, 0, 4]))
    (tmp_path / "t10k-images-idx3-ubyte").write_bytes(idx_images(2))
    (tmp_path / "t10k-labels-idx1-ubyte").write_bytes(idx_labels([7, 2]))
    return tmp_path


class TestCifar10:
    def test_load_nested_directory(self, cifar_root):
        splits = cifar10.load(cifar_root)
        assert splits.train.images.shape == (15, 3, 32, 32)
        assert splits.train.images.dtype == np.float32
        assert_array_equal(splits.train.labels[:6], [0, 9, 3, 1, 8, 3])
        assert_array_equal(splits.test.labels, [7, 0])
        assert splits.num_classes == 10

    def test_record_layout(self, rng):
        buf = cifar_records([4], rng)
        images, labels = cifar10.parse_records(buf)
        assert labels.tolist() == [4]
        assert images[0, 1, 0, 0] == buf[1 + 1024]
        assert images[0, 0, 1, 2] == buf[1 + 32 + 2]

    def test_unnormalized_pixels_in_unit_range(self, cifar_root):
        x = cifar10.load(cifar_root, normalized=False).train.images
        assert 0.0 <= x.min() and x.max() <= 1.0

    def test_partial_record(self, rng):
        buf = cifar_records([1, 2], rng)[:-10]
        with pytest.raises(ParseError) as exc:
            cifar10.parse_records(buf)
        assert exc.value.offset == cifar10.RECORD_BYTES

    def test_label_out_of_range(self, rng):
        with pytest.raises(ParseError) as exc:
            cifar10.parse_records(cifar_records([1, 2, 10], rng))
        assert exc.value.offset == 2 * cifar10.RECORD_BYTES

    def test_missing_batch(self, cifar_root):
        (cifar_root / "cifar-10-batches-bin" / "data_batch_3.bin").unlink()
        with pytest.raises(DataIOError, match="data_batch_3"):
            cifar10.load(cifar_root)


class TestMnist:
    def test_header(self):
        buf = idx_images(60000, pixels=b"")
        magic, count, rows, cols = struct.unpack(">IIII", buf[:16])
        assert (magic, count, rows, cols) == (0x00000803, 60000, 28, 28)

    def test_load_with_gzip_labels(self, mnist_root):
        splits = mnist.load(mnist_root, normalized=False)
        assert splits.train.images.shape == (3, 1, 28, 28)
        assert_array_equal(splits.train.labels, [5, 0, 4])
        assert splits.train.images[0, 0, 0, 1] == pytest.approx(1 / 255)
        assert splits.test.images.shape == (2, 1, 28, 28)

    def test_normalized(self, mnist_root):
        x = mnist.load(mnist_root).test.images
        assert_allclose(x, np.full(x.shape, -0.1307 / 0.3081, dtype=np.float32), rtol=1e-6)

    def test_bad_image_magic(self):
        with pytest.raises(ParseError) as exc:
            mnist.parse_idx_images(idx_images(1, magic=0x00000801))
        assert exc.value.offset == 0

    def test_pixel_count_mismatch(self):
        buf = idx_images(2)[:-5]
        with pytest.raises(ParseError) as exc:
            mnist.parse_idx_images(buf)
        assert exc.value.offset == len(buf)

    def test_short_header(self):
        with pytest.raises(ParseError):
            mnist.parse_idx_labels(b"\x00\x00\x08")

    def test_bad_label(self):
        with pytest.raises(ParseError) as exc:
            mnist.parse_idx_labels(idx_labels([1, 12]))
        assert exc.value.offset == 9

    def test_count_mismatch_between_files(self, mnist_root):
        (mnist_root / "t10k-labels-idx1-ubyte").write_bytes(idx_labels([7, 2, 1]))
        with pytest.raises(ParseError, match="2 images but 3 labels"):
            mnist.load(mnist_root)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataIOError):
            mnist.load(tmp_path)

    def test_corrupt_gzip(self, tmp_path):
        (tmp_path / "x.gz").write_bytes(b"not gzip at all")
        with pytest.raises(DataIOError):
            mnist.read_idx(tmp_path / "x")


class TestSynthetic:
    def test_same_seed_same_tensors(self):
        source = DatasetSource(kind="synthetic", seed=7)
        a, b = load_dataset(source), load_dataset(source)
        assert_array_equal(a.train.images, b.train.images)
        assert_array_equal(a.test.labels, b.test.labels)

    def test_seed_changes_data(self):
        a = load_dataset(DatasetSource(seed=1)).train.images
        b = load_dataset(DatasetSource(seed=2)).train.images
        assert not np.array_equal(a, b)

    def test_geometry(self, small_splits):
        assert small_splits.image_shape == (1, 8, 8)
        assert len(small_splits.train) == 128
        assert len(small_splits.test) == 96
        assert small_splits.train.labels.max() < 10

    def test_limit(self):
        splits = load_dataset(DatasetSource(limit=10))
        assert len(splits.train) == len(splits.test) == 10

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            DatasetSource(image_shape=[8, 8])


class TestLoader:
    def test_augment_flag_reaches_train_only(self):
        splits = load_dataset(DatasetSource(augment=True, image_shape=[3, 8, 8]))
        assert splits.train.augment
        assert not splits.test.augment

    def test_augmented_batches_differ(self):
        train = load_dataset(DatasetSource(augment=True, image_shape=[3, 8, 8], train_size=32)).train
        (plain, _), = list(train.batches(32))
        (shuffled, labels), = list(train.batches(32, np.random.default_rng(0)))
        assert plain.shape == shuffled.shape
        order = np.random.default_rng(0).permutation(32)
        assert_array_equal(labels, train.labels[order])
        assert not np.array_equal(shuffled, train.images[order])

    def test_flip_only_augmentation(self, rng):
        images = rng.normal(size=(20, 2, 4, 4)).astype(np.float32)
        out = augment(images, rng, pad=0)
        for original, result in zip(images, out):
            assert np.array_equal(result, original) or np.array_equal(result, original[:, :, ::-1])

    def test_crop_keeps_shape(self, rng):
        images = rng.normal(size=(5, 3, 8, 8)).astype(np.float32)
        assert augment(images, rng).shape == images.shape

    def test_batches_cover_dataset(self, small_splits):
        sizes = [len(y) for _, y in small_splits.test.batches(40)]
        assert sizes == [40, 40, 16]

    def test_dataset_validation(self):
        with pytest.raises(DimensionError):
            ArrayDataset(np.zeros((2, 4)), np.zeros(2), 2)
        with pytest.raises(DimensionError):
            ArrayDataset(np.zeros((2, 1, 2, 2)), np.zeros(3), 2)

    def test_normalize(self):
        pixels = np.full((1, 2, 1, 1), 255, dtype=np.uint8)
        assert_allclose(normalize(pixels, (0.5, 0.0), (0.5, 2.0)).reshape(-1), [1.0, 0.5])

    def test_published_geometry(self):
        assert dataset_geometry(DatasetSource(kind="cifar10")) == ((3, 32, 32), 10)
        assert dataset_geometry(DatasetSource(kind="mnist")) == ((1, 28, 28), 10)
        assert dataset_geometry(DatasetSource(num_classes=3, image_shape=[2, 6, 6])) == ((2, 6, 6), 3)

    def test_missing_data_dir(self, monkeypatch):
        monkeypatch.setattr(config, "DATA_DIR", "")
        with pytest.raises(ConfigError):
            load_dataset(DatasetSource(kind="mnist"))


class TestSplitValidation:
    @pytest.fixture
    def train(self):
        return load_dataset(DatasetSource(augment=True, image_shape=[1, 4, 4], train_size=50)).train

    def test_sizes_and_disjoint(self, train):
        kept, val = split_validation(train, 0.2, seed=3)
        assert (len(kept), len(val)) == (40, 10)
        rows = {img.tobytes() for img in train.images}
        kept_rows = {img.tobytes() for img in kept.images}
        val_rows = {img.tobytes() for img in val.images}
        assert not kept_rows & val_rows
        assert kept_rows | val_rows == rows

    def test_augment_stays_on_training_part(self, train):
        kept, val = split_validation(train, 0.2)
        assert kept.augment
        assert not val.augment

    def test_seeded(self, train):
        a, _ = split_validation(train, 0.2, seed=1)
        b, _ = split_validation(train, 0.2, seed=1)
        c, _ = split_validation(train, 0.2, seed=2)
        assert_array_equal(a.labels, b.labels)
        assert_array_equal(a.images, b.images)
        assert not np.array_equal(a.images, c.images)

    def test_zero_fraction_keeps_everything(self, train):
        kept, val = split_validation(train, 0.0)
        assert kept is train
        assert val is None

    def test_tiny_fraction_holds_out_one(self, train):
        _, val = split_validation(train, 0.001)
        assert len(val) == 1

    def test_fraction_leaving_nothing(self):
        tiny = ArrayDataset(np.zeros((2, 1, 2, 2), dtype=np.float32), np.array([0, 1]), 2)
        with pytest.raises(ConfigError, match="no training samples"):
            split_validation(tiny, 0.9)
