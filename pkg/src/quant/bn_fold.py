"""
Folding the ternary scaling factor into the following batch norm.

A ternary layer computes α·(x ⊛ codes). Batch norm is invariant to a common
rescale of its input, running mean, and the square root of its variance and eps,
so dividing the running mean by α and the variance and eps by α² lets the
kernel run at α = 1 with identical eval outputs.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import replace
from typing import List, Optional

import numpy as np

from src.core.errors import FoldError
from src.models.batchnorm import BatchNormParams
from src.models.graph import ModelGraph
from src.schemas.policy_schema import PolicyKind

logger = logging.getLogger(__name__)


def fold_alpha_into_bn(alpha: float, bn: Optional[BatchNormParams]) -> BatchNormParams:
    if bn is None:
        raise FoldError("layer is not followed by batch norm; keep the scaling factor explicit")
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise FoldError(f"cannot fold scaling factor {alpha}; it must be positive and finite")
    scale = float(alpha)
    return BatchNormParams(
        gamma=bn.gamma.copy(),
        beta=bn.beta.copy(),
        running_mean=(bn.running_mean / scale).astype(bn.running_mean.dtype),
        running_var=(bn.running_var / scale ** 2).astype(bn.running_var.dtype),
        eps=bn.eps / scale ** 2,
    )


def fold_graph(model: ModelGraph, strict: bool = False) -> ModelGraph:
    """Copy of model with α folded into every foldable ternary layer.

    The copy is meant for ternary-mode evaluation. Its batch-norm statistics
    no longer match the full-precision weights.
    """
    folded = copy.deepcopy(model)
    skipped: List[str] = []
    for layer in folded.quantizable_layers():
        if layer.policy.kind != PolicyKind.TERN:
            if layer.policy.kind == PolicyKind.REL:
                if strict:
                    raise FoldError(f"layer '{layer.name}' is an expanded layer; its branch factors stay explicit")
                skipped.append(layer.name)
            continue
        bn = folded.following_batchnorm(layer.name)
        (branch,) = layer.quantize()
        if bn is None or branch.alpha <= 0.0:
            if strict:
                fold_alpha_into_bn(branch.alpha, bn.params() if bn is not None else None)
            skipped.append(layer.name)
            continue
        bn.load_params(fold_alpha_into_bn(branch.alpha, bn.params()))
        layer.deploy([replace(branch, alpha=1.0)])
    if skipped:
        logger.info(f"scaling factor kept explicit for {len(skipped)} layers: {', '.join(skipped)}")
    return folded
