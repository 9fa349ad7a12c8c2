from typing import Optional

import numpy as np

from src.core import functional as F
from src.core.tensor import Tensor, is_grad_enabled
from src.models.base import ForwardContext
from src.models.quantized import QuantizedLayer
from src.quant.ternary_kernels import ternary_dense
from src.schemas.policy_schema import QuantPolicy


class Dense(QuantizedLayer):
    """Fully-connected layer, weight F×G. Only the classifier carries a bias."""

    kind = "dense"

    def __init__(
        self,
        name: str,
        in_features: int,
        out_features: int,
        bias: bool = False,
        policy: Optional[QuantPolicy] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        rng = rng or np.random.default_rng(0)
        weight = rng.normal(0.0, np.sqrt(2.0 / in_features), size=(in_features, out_features))
        super().__init__(name, Tensor(weight, requires_grad=True, name=f"{name}.weight"), policy)
        self.bias = Tensor(np.zeros(out_features), requires_grad=True, name=f"{name}.bias") if bias else None

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        if x.ndim != 2:
            x = F.flatten(x)
        if self.uses_ternary(ctx) and not ctx.training and not is_grad_enabled():
            out = None
            for p in self.packed():
                branch = ternary_dense(x, p, counter=ctx.counter)
                out = branch if out is None else out + branch
            if self.bias is not None:
                out = out + self.bias.data
            return Tensor._wrap(out)
        return F.dense(x, self.effective_weight(ctx), self.bias)

    def parameters(self):
        params = super().parameters()
        if self.bias is not None:
            params.append((f"{self.name}.bias", self.bias))
        return params
