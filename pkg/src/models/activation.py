from src.core import functional as F
from src.core.tensor import Tensor
from src.models.base import ForwardContext, Layer


class ReLU(Layer):
    kind = "relu"

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return F.relu(x)


class MaxPool2d(Layer):
    kind = "pool"

    def __init__(self, name: str, kernel: int = 2, stride: int = None):
        super().__init__(name)
        self.kernel = kernel
        self.stride = stride or kernel

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return F.max_pool2d(x, self.kernel, self.stride)


class GlobalAvgPool(Layer):
    kind = "pool"

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return F.global_avg_pool2d(x)


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x: Tensor, ctx: ForwardContext) -> Tensor:
        return F.flatten(x)
