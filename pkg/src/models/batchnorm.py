from dataclasses import dataclass

import numpy as np

from src.core import functional as F
from src.core.tensor import Tensor, get_default_dtype
from src.models.base import ForwardContext, Layer


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float


class BatchNorm(Layer):
    """Per-channel batch norm after every conv and hidden dense layer."""

    kind = "batchnorm"

    def __init__(self, name: str, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__(name)
        self.gamma = Tensor(np.ones(channels), requires_grad=True, name=f"{name}.gamma")
        self.beta = Tensor(np.zeros(channels), requires_grad=True, name=f"{name}.beta")
        self.running_mean = np.zeros(channels, dtype=get_default_dtype())
        self.running_var = np.ones(channels, dtype=get_default_dtype())
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return F.batchnorm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training=ctx.training, momentum=self.momentum, eps=self.eps,
            update_stats=ctx.update_bn_stats,
        )

    def params(self) -> BatchNormParams:
        return BatchNormParams(
            gamma=self.gamma.data.copy(),
            beta=self.beta.data.copy(),
            running_mean=self.running_mean.copy(),
            running_var=self.running_var.copy(),
            eps=self.eps,
        )

    def load_params(self, p: BatchNormParams) -> None:
        self.gamma.data[...] = p.gamma
        self.beta.data[...] = p.beta
        self.running_mean[...] = p.running_mean
        self.running_var[...] = p.running_var
        self.eps = float(p.eps)

    def parameters(self):
        return [(f"{self.name}.gamma", self.gamma), (f"{self.name}.beta", self.beta)]

    def buffers(self):
        return {f"{self.name}.running_mean": self.running_mean, f"{self.name}.running_var": self.running_var}
