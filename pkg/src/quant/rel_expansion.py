"""
Residual Expanded Layers: one full-precision weight tensor ternarized at
T_ex ascending threshold factors. The branch outputs add up, which makes the
stack a multi-threshold quantizer with at most 2·T_ex + 1 levels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core import functional as F
from src.core.errors import ConfigError, DimensionError
from src.core.tensor import Tensor, as_tensor, no_grad
from src.quant.ternarizer import ArrayLike, TernaryTensor, check_beta, dequantize, ternarize

DEFAULT_BETAS = {
    1: (0.05,),
    2: (0.05, 0.1),
    4: (0.05, 0.1, 0.15, 0.2),
}


def default_betas(t_ex: int) -> Tuple[float, ...]:
    try:
        return DEFAULT_BETAS[t_ex]
    except KeyError:
        raise ConfigError(f"no default threshold schedule for T_ex={t_ex}; pass betas explicitly")


def check_betas(betas: Sequence[float]) -> Tuple[float, ...]:
    betas = tuple(check_beta(b) for b in betas)
    if not betas:
        raise ConfigError("at least one threshold factor is required")
    if any(b >= nxt for b, nxt in zip(betas, betas[1:])):
        raise ConfigError(f"threshold factors must be strictly increasing, got {list(betas)}")
    return betas


@dataclass(frozen=True)
class RELStack:
    layers: Tuple[TernaryTensor, ...]
    betas: Tuple[float, ...]

    @property
    def t_ex(self) -> int:
        return len(self.layers)

    @property
    def source_shape(self) -> Tuple[int, ...]:
        return self.layers[0].source_shape

    @property
    def alphas(self) -> List[float]:
        return [t.alpha for t in self.layers]


def expand(w: ArrayLike, betas: Sequence[float]) -> RELStack:
    betas = check_betas(betas)
    return RELStack(layers=tuple(ternarize(w, b) for b in betas), betas=betas)


def effective_quantizer(stack: RELStack) -> np.ndarray:
    total = dequantize(stack.layers[0]).copy()
    for layer in stack.layers[1:]:
        total += dequantize(layer)
    return total


def level_set(stack: RELStack) -> np.ndarray:
    return np.unique(effective_quantizer(stack))


def rel_forward(
    x: ArrayLike,
    stack: RELStack,
    kind: str = "conv",
    stride: int = 1,
    pad: int = 0,
    bias: Optional[np.ndarray] = None,
) -> Tensor:
    """Σ_k α_k·(x ⊛ codes_k), with ⊛ a convolution or a dense product."""
    if kind not in ("conv", "dense"):
        raise ConfigError(f"unknown layer kind '{kind}'")
    x = as_tensor(x)
    with no_grad():
        out = None
        for t in stack.layers:
            codes = Tensor(t.codes.reshape(t.source_shape))
            if kind == "conv":
                branch = F.conv2d(x, codes, stride=stride, pad=pad)
            else:
                if x.ndim != 2 or x.shape[1] != t.source_shape[0]:
                    raise DimensionError(f"dense input {x.shape} does not match REL weight {t.source_shape}")
                branch = F.dense(x, codes)
            branch = F.mul(branch, t.alpha)
            out = branch if out is None else F.add(out, branch)
        if bias is not None:
            out = F.add(out, Tensor(bias))
    return out
