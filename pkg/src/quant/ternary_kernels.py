"""
Multiplication-free conv/dense on packed ternary weights.

Each output accumulates +x for code +1, -x for code -1 and skips code 0; the
only multiply is the final scale by α, once per output element. Accumulation
is float32.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.core import config
from src.core.errors import DimensionError
from src.core.functional import check_conv_geometry, im2col
from src.core.tensor import Tensor
from src.quant.packing import PackedTernary, unpack_codes


@dataclass
class OpCounter:
    add_sub: int = 0
    alpha_muls: int = 0
    weight_muls: int = 0

    def reset(self) -> None:
        self.add_sub = self.alpha_muls = self.weight_muls = 0


# Collects counts for every kernel call while TERN_DEBUG is on
DEBUG_COUNTER = OpCounter()


def _counter(counter: Optional[OpCounter]) -> Optional[OpCounter]:
    if counter is not None:
        return counter
    return DEBUG_COUNTER if config.DEBUG_CHECKS else None


def _as_array(x: Union[np.ndarray, Tensor]) -> np.ndarray:
    return (x.data if isinstance(x, Tensor) else np.asarray(x)).astype(np.float32, copy=False)


def _signed_sums(cols: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """cols (M, K), codes (K, G) -> (M, G) by adding/subtracting selected columns."""
    out = np.zeros((cols.shape[0], codes.shape[1]), dtype=np.float32)
    for g in range(codes.shape[1]):
        pos = np.flatnonzero(codes[:, g] == 1)
        neg = np.flatnonzero(codes[:, g] == -1)
        if pos.size:
            out[:, g] += cols[:, pos].sum(axis=1, dtype=np.float32)
        if neg.size:
            out[:, g] -= cols[:, neg].sum(axis=1, dtype=np.float32)
    return out


def ternary_dense(
    x: Union[np.ndarray, Tensor],
    p: PackedTernary,
    counter: Optional[OpCounter] = None,
) -> np.ndarray:
    x = _as_array(x)
    if len(p.shape) != 2 or x.ndim != 2 or x.shape[1] != p.shape[0]:
        raise DimensionError(f"ternary dense: input {x.shape} does not match weight {p.shape}")
    codes = unpack_codes(p.words, p.length).reshape(p.shape)
    acc = _signed_sums(x, codes)
    out = np.float32(p.alpha) * acc

    counter = _counter(counter)
    if counter is not None:
        counter.add_sub += x.shape[0] * int(np.count_nonzero(codes))
        counter.alpha_muls += out.size
    return out


def ternary_conv2d(
    x: Union[np.ndarray, Tensor],
    p: PackedTernary,
    stride: int = 1,
    pad: int = 0,
    counter: Optional[OpCounter] = None,
) -> np.ndarray:
    x = _as_array(x)
    check_conv_geometry(x.shape, p.shape, stride, pad)
    o, _, kh, kw = p.shape
    n = x.shape[0]
    codes = unpack_codes(p.words, p.length).reshape(o, -1)
    cols, oh, ow = im2col(x, kh, kw, stride, pad)
    acc = _signed_sums(cols, codes.T)
    out = np.float32(p.alpha) * acc.reshape(n, oh, ow, o).transpose(0, 3, 1, 2)

    counter = _counter(counter)
    if counter is not None:
        counter.add_sub += n * oh * ow * int(np.count_nonzero(codes))
        counter.alpha_muls += out.size
    return np.ascontiguousarray(out)
