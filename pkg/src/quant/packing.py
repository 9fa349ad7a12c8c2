"""
2-bit ternary storage.

Sixteen codes per little-endian 32-bit word, code i at bits [2i, 2i+1]:

    0b00 ->  0
    0b01 -> +1
    0b11 -> -1      (2-bit two's complement)
    0b10    invalid

Trailing fields of the last word are 0b00.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.errors import CorruptionError
from src.quant.ternarizer import TernaryTensor

CODES_PER_WORD = 16
WORD_BYTES = 4
HEADER_BYTES = 8  # β and α, both float32

_SHIFTS = (2 * np.arange(CODES_PER_WORD, dtype=np.uint32)).astype(np.uint32)


@dataclass(frozen=True)
class PackedTernary:
    words: np.ndarray  # uint32
    length: int
    alpha: float
    beta: float
    shape: Tuple[int, ...]

    @property
    def nbytes(self) -> int:
        return self.words.size * WORD_BYTES + HEADER_BYTES


def word_count(length: int) -> int:
    return -(-length // CODES_PER_WORD)


def pack(t: TernaryTensor) -> PackedTernary:
    codes = t.codes.reshape(-1).astype(np.int8)
    if codes.size and (codes.min() < -1 or codes.max() > 1):
        raise CorruptionError("ternary codes must lie in {-1, 0, +1}")
    n = codes.size
    fields = np.zeros(word_count(n) * CODES_PER_WORD, dtype=np.uint32)
    fields[:n] = codes.view(np.uint8) & 0b11
    words = np.bitwise_or.reduce(fields.reshape(-1, CODES_PER_WORD) << _SHIFTS, axis=1).astype(np.uint32)
    return PackedTernary(words=words, length=n, alpha=t.alpha, beta=t.beta, shape=tuple(t.source_shape))


def unpack_codes(words: np.ndarray, length: int) -> np.ndarray:
    fields = ((words.astype(np.uint32)[:, None] >> _SHIFTS) & 0b11).reshape(-1)
    if np.any(fields[:length] == 0b10):
        bad = int(np.flatnonzero(fields[:length] == 0b10)[0])
        raise CorruptionError(f"invalid 2-bit field 0b10 at code {bad}")
    if np.any(fields[length:]):
        raise CorruptionError("non-zero padding after the last code")
    return np.where(fields[:length] == 0b11, -1, fields[:length]).astype(np.int8)


def unpack(p: PackedTernary) -> TernaryTensor:
    codes = unpack_codes(p.words, p.length).reshape(p.shape)
    return TernaryTensor(codes=codes, alpha=p.alpha, beta=p.beta, source_shape=tuple(p.shape))
