from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.core.tensor import Tensor


class WeightMode(str, enum.Enum):
    FP = "fp"
    TERNARY = "ternary"


@dataclass
class ForwardContext:
    training: bool = False
    weight_mode: WeightMode = WeightMode.FP
    ics: bool = True
    update_bn_stats: bool = True
    counter: Optional[object] = None


class Layer:
    kind = "layer"

    def __init__(self, name: str):
        self.name = name

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        raise NotImplementedError

    def __call__(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return self.forward(x, ctx)

    def children(self) -> List["Layer"]:
        return []

    def leaves(self) -> Iterator["Layer"]:
        kids = self.children()
        if not kids:
            yield self
        for child in kids:
            yield from child.leaves()

    def parameters(self) -> List[Tuple[str, Tensor]]:
        return []

    def buffers(self) -> Dict[str, np.ndarray]:
        return {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"
