"""
ModelGraph: an ordered layer sequence (residual blocks nest their own
sequences) plus the per-layer quantization policy of every conv/dense layer.
"""
from __future__ import annotations

import logging
from collections import OrderedDict
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from src.core.errors import ConfigError, ShapeMismatchError
from src.core.tensor import Tensor, no_grad
from src.models.base import ForwardContext, Layer, WeightMode
from src.models.batchnorm import BatchNorm
from src.models.quantized import QuantizedLayer
from src.schemas.policy_schema import QuantPolicy

logger = logging.getLogger(__name__)


class ModelGraph:
    def __init__(self, name: str, layers: List[Layer]):
        self.name = name
        self.layers = layers
        names = [leaf.name for leaf in self.leaves()]
        duplicates = {n for n in names if names.count(n) > 1}
        if duplicates:
            raise ConfigError(f"duplicate layer names: {sorted(duplicates)}")

    # ─── STRUCTURE ────────────────────────────────────────────────
    def leaves(self) -> Iterable[Layer]:
        for layer in self.layers:
            yield from layer.leaves()

    def layer(self, name: str) -> Layer:
        for leaf in self.leaves():
            if leaf.name == name:
                return leaf
        raise KeyError(name)

    def quantizable_layers(self) -> List[QuantizedLayer]:
        return [leaf for leaf in self.leaves() if isinstance(leaf, QuantizedLayer)]

    def following_batchnorm(self, name: str) -> Optional[BatchNorm]:
        """Batch norm applied directly to the output of the named layer, if any."""
        sequences = [self.layers]
        while sequences:
            seq = sequences.pop()
            for i, layer in enumerate(seq):
                if layer.name == name:
                    nxt = seq[i + 1] if i + 1 < len(seq) else None
                    return nxt if isinstance(nxt, BatchNorm) else None
                for attr in ("body", "projection"):
                    if hasattr(layer, attr):
                        sequences.append(getattr(layer, attr))
        raise KeyError(name)

    def set_policy(self, name: str, policy: QuantPolicy) -> None:
        layer = self.layer(name)
        if not isinstance(layer, QuantizedLayer):
            raise ConfigError(f"layer '{name}' is a {layer.kind} layer; policies apply to conv/dense only")
        layer.set_policy(policy)

    def policies(self) -> Dict[str, QuantPolicy]:
        return {layer.name: layer.policy for layer in self.quantizable_layers()}

    # ─── PARAMETERS ───────────────────────────────────────────────
    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        params = []
        for leaf in self.leaves():
            params.extend(leaf.parameters())
        return params

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        state = OrderedDict()
        for leaf in self.leaves():
            for name, p in leaf.parameters():
                state[name] = p.data.copy()
            for name, buf in leaf.buffers().items():
                state[name] = buf.copy()
        return state

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        targets: Dict[str, Tuple[str, np.ndarray]] = {}
        for leaf in self.leaves():
            for name, p in leaf.parameters():
                targets[name] = (leaf.name, p.data)
            for name, buf in leaf.buffers().items():
                targets[name] = (leaf.name, buf)
        if strict:
            missing = sorted(set(targets) - set(state))
            unexpected = sorted(set(state) - set(targets))
            if missing or unexpected:
                raise ConfigError(f"state mismatch: missing {missing}, unexpected {unexpected}")
        for name, value in state.items():
            if name not in targets:
                continue
            layer_name, target = targets[name]
            value = np.asarray(value)
            if value.shape != target.shape:
                raise ShapeMismatchError(layer_name, target.shape, value.shape)
        for name, value in state.items():
            if name in targets:
                targets[name][1][...] = value
        for layer in self.quantizable_layers():
            layer.deployed = None
            layer.frozen_alphas = None

    # ─── FORWARD ──────────────────────────────────────────────────
    def forward(self, x: Tensor, ctx: Optional[ForwardContext] = None) -> Tensor:
        ctx = ctx or ForwardContext()
        for layer in self.layers:
            x = layer(x, ctx)
        return x

    __call__ = forward

    def predict(
        self,
        images: np.ndarray,
        weight_mode: WeightMode = WeightMode.FP,
        batch_size: int = 256,
        counter=None,
    ) -> np.ndarray:
        """Eval-mode logits, computed without recording a tape."""
        ctx = ForwardContext(training=False, weight_mode=WeightMode(weight_mode), counter=counter)
        outputs = []
        with no_grad():
            for start in range(0, len(images), batch_size):
                outputs.append(self.forward(Tensor(images[start:start + batch_size]), ctx).data)
        return np.concatenate(outputs, axis=0)

    def trace_shapes(self, input_shape: Tuple[int, ...]) -> Dict[str, Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        """Input and output shape of every leaf layer for one eval forward."""
        shapes: Dict[str, Tuple[Tuple[int, ...], Tuple[int, ...]]] = {}
        traced_leaves = list(self.leaves())
        for leaf in traced_leaves:
            def traced(x, ctx, _leaf=leaf, _fwd=leaf.forward):
                out = _fwd(x, ctx)
                shapes[_leaf.name] = (tuple(x.shape), tuple(out.shape))
                return out

            leaf.forward = traced
        try:
            with no_grad():
                self.forward(Tensor(np.zeros(input_shape)), ForwardContext(training=False))
        finally:
            for leaf in traced_leaves:
                del leaf.forward
        return shapes

    def __repr__(self) -> str:
        return f"ModelGraph({self.name!r}, {len(list(self.leaves()))} layers)"
