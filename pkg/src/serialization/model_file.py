"""
TernModelFile: a model's tensors in one little-endian binary file.

    header   magic b"TERN" | version u16 | entry count u32
    entry    name length u16 | name (UTF-8) | policy tag u8 | rank u8 | dims u32 × rank
             FP:        raw <f4 data
             TERN/REL:  T_ex u8, then per block β <f4 | α <f4 | ceil(n/16) <u4 code words
    trailer  CRC32 <u4 over every preceding byte

Weights of quantized layers are stored as packed ternary blocks in ternary
mode; every other tensor (batch-norm parameters and statistics, biases,
full-precision layers) is stored raw.
"""
from __future__ import annotations

import enum
import logging
import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.core.errors import (
    BadMagicError,
    ChecksumError,
    DataIOError,
    ModelFileError,
    PolicyMismatchError,
    ShapeMismatchError,
    TruncatedError,
    VersionError,
)
from src.models.base import WeightMode
from src.models.graph import ModelGraph
from src.quant.packing import PackedTernary, unpack, unpack_codes, word_count
from src.schemas.policy_schema import PolicyKind, QuantPolicy

logger = logging.getLogger(__name__)

MAGIC = b"TERN"
VERSION = 1
TRAILER_BYTES = 4


class PolicyTag(enum.IntEnum):
    FP = 0
    TERN = 1
    REL = 2


POLICY_TAGS = {PolicyKind.FP: PolicyTag.FP, PolicyKind.TERN: PolicyTag.TERN, PolicyKind.REL: PolicyTag.REL}


@dataclass(frozen=True)
class FileEntry:
    name: str
    tag: PolicyTag
    shape: Tuple[int, ...]
    data: Optional[np.ndarray] = None
    blocks: Tuple[PackedTernary, ...] = ()

    @property
    def t_ex(self) -> int:
        return len(self.blocks)


@dataclass
class TernModelFile:
    entries: List[FileEntry] = field(default_factory=list)
    version: int = VERSION

    def entry(self, name: str) -> FileEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def names(self) -> List[str]:
        return [e.name for e in self.entries]


# ─── ENCODING ─────────────────────────────────────────────────────

def encode_entry(entry: FileEntry) -> bytes:
    name = entry.name.encode("utf-8")
    parts = [struct.pack("<H", len(name)), name, struct.pack("<BB", int(entry.tag), len(entry.shape))]
    parts.append(struct.pack(f"<{len(entry.shape)}I", *entry.shape))
    if entry.tag == PolicyTag.FP:
        parts.append(np.ascontiguousarray(entry.data, dtype="<f4").tobytes())
    else:
        parts.append(struct.pack("<B", entry.t_ex))
        for block in entry.blocks:
            parts.append(struct.pack("<ff", block.beta, block.alpha))
            parts.append(block.words.astype("<u4").tobytes())
    return b"".join(parts)


def encode_file(model_file: TernModelFile) -> bytes:
    body = b"".join(
        [MAGIC, struct.pack("<HI", model_file.version, len(model_file.entries))]
        + [encode_entry(e) for e in model_file.entries]
    )
    return body + struct.pack("<I", zlib.crc32(body))


def model_entries(model: ModelGraph, mode: WeightMode = WeightMode.FP) -> TernModelFile:
    """File entries for a model in state_dict order."""
    mode = WeightMode(mode)
    ternary_weights = {}
    if mode == WeightMode.TERNARY:
        for layer in model.quantizable_layers():
            if layer.policy.quantized:
                ternary_weights[f"{layer.name}.weight"] = layer
    entries = []
    for name, value in model.state_dict().items():
        layer = ternary_weights.get(name)
        if layer is None:
            entries.append(FileEntry(name, PolicyTag.FP, tuple(value.shape), data=value))
        else:
            entries.append(FileEntry(name, POLICY_TAGS[layer.policy.kind], tuple(value.shape), blocks=tuple(layer.packed())))
    return TernModelFile(entries)


def encode_model(model: ModelGraph, mode: WeightMode = WeightMode.FP) -> bytes:
    return encode_file(model_entries(model, mode))


def save_model(path: Union[str, Path], model: ModelGraph, mode: WeightMode = WeightMode.FP) -> Path:
    path = Path(path)
    data = encode_model(model, mode)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise DataIOError(f"cannot write model file {path}: {exc.strerror or exc}")
    logger.info(f"saved {WeightMode(mode).value} model to {path} ({len(data)} bytes)")
    return path


# ─── DECODING ─────────────────────────────────────────────────────

class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedError(
                f"file ends inside {what}: need {n} bytes at offset {self.pos}, {len(self.buf) - self.pos} left"
            )
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _decode_entry(reader: _Reader) -> FileEntry:
    (name_len,) = reader.unpack("<H", "entry name length")
    raw_name = reader.take(name_len, "entry name")
    try:
        name = raw_name.decode("utf-8")
    except UnicodeDecodeError:
        raise ModelFileError(f"entry name at offset {reader.pos - name_len} is not valid UTF-8")
    tag_value, rank = reader.unpack("<BB", f"header of '{name}'")
    try:
        tag = PolicyTag(tag_value)
    except ValueError:
        raise ModelFileError(f"entry '{name}' has unknown policy tag {tag_value}")
    shape = tuple(reader.unpack(f"<{rank}I", f"dims of '{name}'"))
    n = math.prod(shape)
    if tag == PolicyTag.FP:
        data = np.frombuffer(reader.take(4 * n, f"data of '{name}'"), dtype="<f4").reshape(shape)
        return FileEntry(name, tag, shape, data=data.astype(np.float32))
    (t_ex,) = reader.unpack("<B", f"expansion factor of '{name}'")
    if t_ex < 1 or (tag == PolicyTag.TERN and t_ex != 1):
        raise ModelFileError(f"entry '{name}' declares {t_ex} blocks for tag {tag.name}")
    blocks = []
    for k in range(t_ex):
        beta, alpha = reader.unpack("<ff", f"block {k} header of '{name}'")
        words = np.frombuffer(reader.take(4 * word_count(n), f"block {k} codes of '{name}'"), dtype="<u4")
        words = words.astype(np.uint32)
        unpack_codes(words, n)
        blocks.append(PackedTernary(words=words, length=n, alpha=float(alpha), beta=float(beta), shape=shape))
    return FileEntry(name, tag, shape, blocks=tuple(blocks))


def decode(buf: bytes) -> TernModelFile:
    if len(buf) < len(MAGIC) + 6 + TRAILER_BYTES:
        raise TruncatedError(f"file of {len(buf)} bytes is shorter than header and trailer")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack("<HI", buf[4:10])
    if version != VERSION:
        raise VersionError(f"unsupported format version {version}, expected {VERSION}")
    body = buf[:-TRAILER_BYTES]
    (stored,) = struct.unpack("<I", buf[-TRAILER_BYTES:])
    actual = zlib.crc32(body)
    if stored != actual:
        raise ChecksumError(f"CRC32 mismatch: stored 0x{stored:08x}, computed 0x{actual:08x}")
    reader = _Reader(body)
    reader.pos = 10
    entries = [_decode_entry(reader) for _ in range(count)]
    if reader.pos != len(body):
        raise ModelFileError(f"{len(body) - reader.pos} unexpected bytes after the last entry")
    return TernModelFile(entries, version)


def read_model_file(path: Union[str, Path]) -> TernModelFile:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise DataIOError(f"cannot read model file {path}: {exc.strerror or exc}")
    return decode(buf)


def apply_model_file(model_file: TernModelFile, model: ModelGraph, mode: WeightMode = WeightMode.FP) -> ModelGraph:
    """Load decoded entries into model; nothing is modified unless every entry fits."""
    mode = WeightMode(mode)
    state = model.state_dict()
    missing = sorted(set(state) - set(model_file.names))
    unexpected = sorted(set(model_file.names) - set(state))
    if missing or unexpected:
        raise ModelFileError(f"file does not match model: missing {missing}, unexpected {unexpected}")

    owners: Dict[str, object] = {f"{layer.name}.weight": layer for layer in model.quantizable_layers()}
    fp_values: Dict[str, np.ndarray] = {}
    deployments = []
    for entry in model_file.entries:
        layer = owners.get(entry.name)
        layer_name = layer.name if layer is not None else entry.name.rsplit(".", 1)[0]
        if tuple(entry.shape) != tuple(state[entry.name].shape):
            raise ShapeMismatchError(layer_name, tuple(state[entry.name].shape), tuple(entry.shape))
        if entry.tag == PolicyTag.FP:
            if mode == WeightMode.TERNARY and layer is not None and layer.policy.quantized:
                raise PolicyMismatchError(
                    f"layer '{layer.name}' is {layer.policy.kind.value} in the model but full precision in the file"
                )
            fp_values[entry.name] = entry.data
            continue
        if mode == WeightMode.FP:
            raise PolicyMismatchError(f"entry '{entry.name}' is ternary; load the file in ternary mode")
        if layer is None:
            raise PolicyMismatchError(f"entry '{entry.name}' is ternary but does not belong to a conv/dense layer")
        expected = POLICY_TAGS[layer.policy.kind]
        if entry.tag != expected or entry.t_ex != len(layer.policy.betas):
            raise PolicyMismatchError(
                f"layer '{layer.name}': file holds {entry.tag.name} with T_ex={entry.t_ex}, "
                f"model expects {expected.name} with T_ex={len(layer.policy.betas)}"
            )
        deployments.append((layer, entry))

    model.load_state_dict(fp_values, strict=False)
    for layer, entry in deployments:
        betas = [b.beta for b in entry.blocks]
        layer.set_policy(QuantPolicy(kind=layer.policy.kind, betas=betas))
        layer.deploy([unpack(b) for b in entry.blocks])
    return model


def load_model(path: Union[str, Path], model: ModelGraph, mode: WeightMode = WeightMode.FP) -> ModelGraph:
    return apply_model_file(read_model_file(path), model, mode)


def adopt_file_policies(model_file: TernModelFile, model: ModelGraph) -> WeightMode:
    """Set each conv/dense policy to what the file stores; ternary mode if any entry is ternary."""
    layers = {f"{layer.name}.weight": layer for layer in model.quantizable_layers()}
    mode = WeightMode.FP
    for entry in model_file.entries:
        layer = layers.get(entry.name)
        if layer is None:
            continue
        if entry.tag == PolicyTag.FP:
            layer.set_policy(QuantPolicy.fp())
            continue
        kind = PolicyKind.TERN if entry.tag == PolicyTag.TERN else PolicyKind.REL
        layer.set_policy(QuantPolicy(kind=kind, betas=[b.beta for b in entry.blocks]))
        mode = WeightMode.TERNARY
    return mode


def load_model_as_stored(path: Union[str, Path], model: ModelGraph) -> WeightMode:
    """Load a file of either mode, taking layer policies from the file."""
    model_file = read_model_file(path)
    mode = adopt_file_policies(model_file, model)
    apply_model_file(model_file, model, mode)
    return mode
