import struct
import zlib

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.core.errors import (
    BadMagicError,
    ChecksumError,
    CorruptionError,
    DataIOError,
    ModelFileError,
    ParseError,
    PolicyMismatchError,
    ShapeMismatchError,
    TruncatedError,
    VersionError,
)
from src.models import Dense, ModelGraph, WeightMode
from src.schemas.policy_schema import PolicyKind, QuantPolicy
from src.serialization.model_file import (
    MAGIC,
    PolicyTag,
    decode,
    encode_model,
    load_model,
    load_model_as_stored,
    read_model_file,
    save_model,
)
from src.serialization.weight_dump import format_weight_dump, parse_weight_dump, read_weight_dump, write_weight_dump


def ternary_lenet(make_lenet, seed=0, policy=None):
    model = make_lenet(seed=seed)
    for layer in model.quantizable_layers():
        model.set_policy(layer.name, policy or QuantPolicy.tern(0.05))
    return model


def with_crc(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body))


class TestRoundTrip:
    def test_fp_mode(self, make_lenet, small_splits, tmp_path):
        source = make_lenet(seed=1)
        source.layer("bn2").running_var[...] = 2.0
        path = save_model(tmp_path / "fp.tern", source)
        target = load_model(path, make_lenet(seed=2))
        images = small_splits.test.images[:8]
        assert_array_equal(target.predict(images), source.predict(images))

    def test_ternary_mode(self, make_lenet, small_splits, tmp_path):
        source = ternary_lenet(make_lenet, seed=1)
        path = save_model(tmp_path / "tern.tern", source, WeightMode.TERNARY)
        target = load_model(path, ternary_lenet(make_lenet, seed=2), WeightMode.TERNARY)
        images = small_splits.test.images[:8]
        assert_array_equal(
            target.predict(images, WeightMode.TERNARY), source.predict(images, WeightMode.TERNARY)
        )

    def test_expanded_layers(self, make_lenet, small_splits, tmp_path):
        policy = QuantPolicy.rel([0.05, 0.1])
        source = ternary_lenet(make_lenet, seed=1, policy=policy)
        path = save_model(tmp_path / "rel.tern", source, WeightMode.TERNARY)
        entry = read_model_file(path).entry("conv2.weight")
        assert entry.tag == PolicyTag.REL
        assert entry.t_ex == 2
        target = make_lenet(seed=2)
        assert load_model_as_stored(path, target) == WeightMode.TERNARY
        assert target.layer("conv2").policy.kind == PolicyKind.REL
        images = small_splits.test.images[:8]
        assert_array_equal(
            target.predict(images, WeightMode.TERNARY), source.predict(images, WeightMode.TERNARY)
        )

    def test_encoding_is_deterministic(self, make_lenet):
        model = ternary_lenet(make_lenet)
        assert encode_model(model, WeightMode.TERNARY) == encode_model(model, WeightMode.TERNARY)

    def test_entries_follow_state_order(self, make_lenet):
        model = make_lenet()
        assert decode(encode_model(model)).names == list(model.state_dict())

    def test_fp_file_loads_as_stored(self, make_lenet, tmp_path):
        path = save_model(tmp_path / "fp.tern", make_lenet())
        target = ternary_lenet(make_lenet)
        assert load_model_as_stored(path, target) == WeightMode.FP
        assert all(not p.quantized for p in target.policies().values())


class TestSize:
    def test_large_dense_layer(self):
        model = ModelGraph("fc", [Dense("fc", 4096, 1000)])
        fp_size = len(encode_model(model))
        model.set_policy("fc", QuantPolicy.tern(0.05))
        tern_size = len(encode_model(model, WeightMode.TERNARY))
        assert tern_size - 4096 * 1000 * 2 // 8 < 64
        assert 15.9 <= fp_size / tern_size <= 16.0


class TestCorruption:
    @pytest.fixture
    def encoded(self, make_lenet):
        return encode_model(ternary_lenet(make_lenet), WeightMode.TERNARY)

    @pytest.mark.parametrize("size", [0, 5, 11])
    def test_shorter_than_header(self, encoded, size):
        with pytest.raises(TruncatedError):
            decode(encoded[:size])

    @pytest.mark.parametrize("cut", [12, 100, -1])
    def test_cut_inside_entries(self, encoded, cut):
        body = encoded[:-4]
        with pytest.raises(TruncatedError):
            decode(with_crc(body[:cut]))

    def test_truncated_keeps_model_untouched(self, make_lenet, encoded, tmp_path):
        path = tmp_path / "cut.tern"
        path.write_bytes(encoded[: len(encoded) // 2])
        model = make_lenet(seed=5)
        before = model.state_dict()
        with pytest.raises(ModelFileError):
            load_model(path, model, WeightMode.TERNARY)
        for name, value in model.state_dict().items():
            assert_array_equal(value, before[name])

    def test_bad_magic(self, encoded):
        with pytest.raises(BadMagicError):
            decode(b"NRET" + encoded[4:])

    def test_version(self, encoded):
        body = encoded[:-4]
        bumped = MAGIC + struct.pack("<H", 2) + body[6:]
        with pytest.raises(VersionError):
            decode(with_crc(bumped))

    def test_checksum(self, encoded):
        flipped = bytearray(encoded)
        # last byte of the classifier bias data
        flipped[-5] ^= 0x01
        with pytest.raises(ChecksumError):
            decode(bytes(flipped))

    # entry count, first name length, first name byte
    @pytest.mark.parametrize("offset", [6, 10, 12])
    def test_flipped_structure_byte_fails_checksum(self, encoded, offset):
        flipped = bytearray(encoded)
        flipped[offset] ^= 0x40
        with pytest.raises(ChecksumError):
            decode(bytes(flipped))

    def test_invalid_code_field(self):
        model = ModelGraph("fc", [Dense("fc", 4, 2)])
        model.set_policy("fc", QuantPolicy.tern(0.05))
        body = bytearray(encode_model(model, WeightMode.TERNARY)[:-4])
        # the weight's only code word ends the body
        body[-4:] = struct.pack("<I", 0b10)
        with pytest.raises(CorruptionError):
            decode(with_crc(bytes(body)))

    def test_trailing_bytes(self, encoded):
        with pytest.raises(ModelFileError):
            decode(with_crc(encoded[:-4] + b"\x00"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataIOError):
            read_model_file(tmp_path / "absent.tern")


class TestApply:
    def test_ternary_file_in_fp_mode(self, make_lenet, tmp_path):
        path = save_model(tmp_path / "tern.tern", ternary_lenet(make_lenet), WeightMode.TERNARY)
        with pytest.raises(PolicyMismatchError):
            load_model(path, ternary_lenet(make_lenet), WeightMode.FP)

    def test_fp_entry_for_ternary_layer(self, make_lenet, tmp_path):
        path = save_model(tmp_path / "fp.tern", make_lenet())
        with pytest.raises(PolicyMismatchError, match="conv1"):
            load_model(path, ternary_lenet(make_lenet), WeightMode.TERNARY)

    def test_expansion_mismatch(self, make_lenet, tmp_path):
        path = save_model(tmp_path / "tern.tern", ternary_lenet(make_lenet), WeightMode.TERNARY)
        target = ternary_lenet(make_lenet, policy=QuantPolicy.rel([0.05, 0.1]))
        with pytest.raises(PolicyMismatchError):
            load_model(path, target, WeightMode.TERNARY)

    def test_shape_mismatch_names_layer(self, make_lenet, tmp_path):
        path = save_model(tmp_path / "fp.tern", make_lenet(num_classes=3))
        with pytest.raises(ShapeMismatchError, match="fc2"):
            load_model(path, make_lenet(num_classes=10))

    def test_different_architecture(self, make_lenet, tmp_path):
        path = save_model(tmp_path / "fc.tern", ModelGraph("fc", [Dense("fc", 4, 2)]))
        with pytest.raises(ModelFileError, match="missing"):
            load_model(path, make_lenet())


class TestWeightDump:
    def test_round_trip(self, make_lenet, tmp_path):
        state = make_lenet().state_dict()
        loaded = read_weight_dump(write_weight_dump(tmp_path / "w.txt", state))
        assert list(loaded) == list(state)
        for name, value in state.items():
            assert_array_equal(loaded[name], value)

    def test_comments_and_blank_lines(self):
        tensors = parse_weight_dump("# header\n\nfc.weight\t2x2\t1,2,3,4\n")
        assert_array_equal(tensors["fc.weight"], [[1, 2], [3, 4]])

    def test_format(self):
        assert format_weight_dump({"b": np.array([0.5, -1.0])}) == "b\t2\t0.5,-1.0\n"

    @pytest.mark.parametrize("text,offset", [
        ("a\t2\t1,2\nb\t3\t1,2\n", 8),
        ("a\t2\n", 0),
        ("a\t2\t1,x\n", 0),
        ("a\t1\t1\na\t1\t2\n", 6),
    ])
    def test_errors_carry_offset(self, text, offset):
        with pytest.raises(ParseError) as exc:
            parse_weight_dump(text)
        assert exc.value.offset == offset
