"""
Shared behaviour of layers that carry a quantization policy (conv, dense).

The full-precision weight is the master copy. Ternary views are recomputed
from it on demand and never written back.
"""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import List, Optional

import numpy as np

from src.core import functional as F
from src.core.tensor import Tensor
from src.models.base import ForwardContext, Layer, WeightMode
from src.quant.packing import PackedTernary, pack
from src.quant.ternarizer import TernaryTensor, ternarize, ternary_weight
from src.schemas.policy_schema import QuantPolicy

logger = logging.getLogger(__name__)


class QuantizedLayer(Layer):
    def __init__(self, name: str, weight: Tensor, policy: Optional[QuantPolicy] = None):
        super().__init__(name)
        self.weight = weight
        self.policy = policy or QuantPolicy.fp()
        self.frozen_alphas: Optional[List[float]] = None
        # codes + α loaded from a ternary model file; they take precedence over the weight
        self.deployed: Optional[List[TernaryTensor]] = None
        self.last_quant: List[TernaryTensor] = []

    def set_policy(self, policy: QuantPolicy) -> None:
        self.policy = policy
        self.frozen_alphas = None
        self.deployed = None

    def freeze_alphas(self) -> List[float]:
        """Fix α to its value for the current weights (training without ICS)."""
        self.frozen_alphas = [ternarize(self.weight.data, b).alpha for b in self.policy.betas]
        return self.frozen_alphas

    def quantize(self) -> List[TernaryTensor]:
        """Ternary branches exactly as inference runs them."""
        if not self.policy.quantized:
            return []
        if self.deployed is not None:
            return list(self.deployed)
        branches = [ternarize(self.weight.data, b) for b in self.policy.betas]
        if self.frozen_alphas is not None:
            branches = [replace(t, alpha=a) for t, a in zip(branches, self.frozen_alphas)]
        return branches

    def packed(self) -> List[PackedTernary]:
        return [pack(t) for t in self.quantize()]

    def deploy(self, branches: List[TernaryTensor]) -> None:
        """Pin the layer to stored codes; the master weight becomes their dequantized sum."""
        self.deployed = list(branches)
        total = np.zeros(self.weight.shape, dtype=np.float64)
        for t in branches:
            total += t.alpha * t.codes.reshape(self.weight.shape)
        self.weight.data[...] = total

    def uses_ternary(self, ctx: ForwardContext) -> bool:
        return self.policy.quantized and ctx.weight_mode == WeightMode.TERNARY

    def effective_weight(self, ctx: ForwardContext) -> Tensor:
        """Weight seen by the training forward: master weight, or Σ_k α_k·codes_k with STE backward."""
        if not self.uses_ternary(ctx):
            return self.weight
        if self.deployed is not None:
            return Tensor(self.weight.data)
        total = None
        self.last_quant = []
        for k, beta in enumerate(self.policy.betas):
            alpha = None if (ctx.ics or self.frozen_alphas is None) else self.frozen_alphas[k]
            w_q, t = ternary_weight(self.weight, beta, alpha)
            self.last_quant.append(t)
            total = w_q if total is None else F.add(total, w_q)
        return total

    def parameters(self):
        return [(f"{self.name}.weight", self.weight)]
