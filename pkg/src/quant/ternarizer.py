"""
Statistical weight ternarization.

    Δth   = β × max|w|
    code  = sign(w) where |w| >= Δth, else 0
    α     = mean |w| over {|w| >= Δth}          (0 when that set is empty)
    ∂g/∂w = ∂g/∂w' where |w| <= 1, else 0        (straight-through estimator)

Threshold comparisons run in float64 so codes do not depend on the working
precision of the weights.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from src.core.errors import ConfigError, DimensionError
from src.core.tensor import Tensor, get_default_dtype, record

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Tensor]

STE_CLIP = 1.0


@dataclass(frozen=True)
class ThresholdSpec:
    beta: float
    delta_th: float


@dataclass(frozen=True)
class TernaryTensor:
    codes: np.ndarray  # int8 over {-1, 0, +1}
    alpha: float
    beta: float
    source_shape: Tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.codes.size)

    @property
    def nonzero(self) -> int:
        return int(np.count_nonzero(self.codes))

    @property
    def density(self) -> float:
        return self.nonzero / self.size if self.size else 0.0


def _as_array(w: ArrayLike) -> np.ndarray:
    return w.data if isinstance(w, Tensor) else np.asarray(w)


def check_beta(beta: float) -> float:
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"threshold factor beta must lie in (0, 1), got {beta}")
    return float(beta)


def compute_threshold(w: ArrayLike, beta: float) -> ThresholdSpec:
    w = _as_array(w)
    beta = check_beta(beta)
    if w.size == 0:
        raise DimensionError("cannot compute a threshold for an empty weight tensor")
    return ThresholdSpec(beta=beta, delta_th=beta * float(np.max(np.abs(w.astype(np.float64)))))


def _over_threshold(w: np.ndarray, spec: ThresholdSpec) -> np.ndarray:
    return np.abs(w.astype(np.float64)) >= spec.delta_th


def compute_alpha(w: ArrayLike, spec: ThresholdSpec) -> float:
    w = _as_array(w)
    magnitudes = np.abs(w.astype(np.float64))[_over_threshold(w, spec)]
    if magnitudes.size == 0:
        logger.warning(f"no weight reaches threshold {spec.delta_th:.3g}; scaling factor set to 0")
        return 0.0
    alpha = float(magnitudes.mean())
    if alpha == 0.0:
        logger.warning("all-zero weight tensor ternarized; scaling factor set to 0")
    return alpha


def ternarize(w: ArrayLike, beta: float) -> TernaryTensor:
    w = _as_array(w)
    spec = compute_threshold(w, beta)
    codes = (np.sign(w) * _over_threshold(w, spec)).astype(np.int8)
    return TernaryTensor(codes=codes, alpha=compute_alpha(w, spec), beta=spec.beta, source_shape=tuple(w.shape))


def dequantize(t: TernaryTensor) -> np.ndarray:
    return (t.alpha * t.codes.astype(np.float64)).astype(get_default_dtype()).reshape(t.source_shape)


def ste_backward(upstream: ArrayLike, w: ArrayLike) -> np.ndarray:
    upstream, w = _as_array(upstream), _as_array(w)
    if upstream.shape != w.shape:
        raise DimensionError(f"STE upstream shape {upstream.shape} differs from weight shape {w.shape}")
    return np.where(np.abs(w) <= STE_CLIP, upstream, np.zeros_like(upstream))


def ternary_weight(w: Tensor, beta: float, alpha: Optional[float] = None) -> Tuple[Tensor, TernaryTensor]:
    """Tape op: forward α·codes, backward through the STE mask.

    A given alpha replaces the statistically computed one (frozen scaling factor).
    Returns the quantized tensor and the TernaryTensor it was built from.
    """
    t = ternarize(w.data, beta)
    if alpha is not None:
        t = TernaryTensor(codes=t.codes, alpha=float(alpha), beta=t.beta, source_shape=t.source_shape)
    out = (t.alpha * t.codes).astype(w.dtype)

    def _backward(g, saved):
        return (ste_backward(g, w.data),)

    return record("ternary_weight", (w,), out, _backward), t
