from typing import Optional

import numpy as np

from src.core import functional as F
from src.core.tensor import Tensor, is_grad_enabled
from src.models.base import ForwardContext
from src.models.quantized import QuantizedLayer
from src.quant.ternary_kernels import ternary_conv2d
from src.schemas.policy_schema import QuantPolicy


class Conv2d(QuantizedLayer):
    """Bias-free convolution; the following batch norm supplies the shift."""

    kind = "conv"

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel: int,
        stride: int = 1,
        pad: int = 0,
        policy: Optional[QuantPolicy] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel * kernel
        weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_channels, in_channels, kernel, kernel))
        super().__init__(name, Tensor(weight, requires_grad=True, name=f"{name}.weight"), policy)
        self.stride = stride
        self.pad = pad

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        if self.uses_ternary(ctx) and not ctx.training and not is_grad_enabled():
            out = None
            for p in self.packed():
                branch = ternary_conv2d(x, p, self.stride, self.pad, counter=ctx.counter)
                out = branch if out is None else out + branch
            return Tensor._wrap(out)
        return F.conv2d(x, self.effective_weight(ctx), stride=self.stride, pad=self.pad)
