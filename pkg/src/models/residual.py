from typing import List, Optional

from src.core import functional as F
from src.core.errors import ConfigError
from src.core.tensor import Tensor
from src.models.base import ForwardContext, Layer


class ResidualBlock(Layer):
    """body(x) + shortcut(x), then ReLU.

    Shortcut kinds: "identity", "A" (parameter-free subsample + zero channel
    padding) and "B" (projection layers, usually 1×1 conv + batch norm).
    """

    kind = "shortcut-add"

    def __init__(
        self,
        name: str,
        body: List[Layer],
        shortcut: str = "identity",
        out_channels: Optional[int] = None,
        stride: int = 1,
        projection: Optional[List[Layer]] = None,
    ):
        super().__init__(name)
        if shortcut not in ("identity", "A", "B"):
            raise ConfigError(f"unknown shortcut type '{shortcut}'")
        if shortcut == "B" and not projection:
            raise ConfigError(f"block '{name}': type-B shortcut needs projection layers")
        self.body = body
        self.shortcut = shortcut
        self.out_channels = out_channels
        self.stride = stride
        self.projection = projection or []

    def children(self):
        return self.body + self.projection

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        out = x
        for layer in self.body:
            out = layer(out, ctx)
        if self.shortcut == "A":
            residual = F.shortcut_pad(x, self.out_channels, self.stride)
        elif self.shortcut == "B":
            residual = x
            for layer in self.projection:
                residual = layer(residual, ctx)
        else:
            residual = x
        if residual.shape != out.shape:
            raise ConfigError(f"block '{self.name}': shortcut shape {residual.shape} != body shape {out.shape}")
        return F.relu(F.add(out, residual))
