from typing import Optional

import numpy as np

from src.models.activation import Flatten, MaxPool2d, ReLU
from src.models.batchnorm import BatchNorm
from src.models.conv import Conv2d
from src.models.dense import Dense
from src.models.graph import ModelGraph


def build_lenet(
    in_channels: int = 1,
    image_size: int = 28,
    num_classes: int = 10,
    width: int = 16,
    hidden: Optional[int] = None,
    seed: int = 0,
) -> ModelGraph:
    """conv-bn-relu-pool ×2, dense-bn-relu, classifier dense with bias. No dropout."""
    rng = np.random.default_rng(seed)
    hidden = hidden or 4 * width
    spatial = image_size // 4
    layers = [
        Conv2d("conv1", in_channels, width, 3, pad=1, rng=rng),
        BatchNorm("bn1", width),
        ReLU("relu1"),
        MaxPool2d("pool1", 2),
        Conv2d("conv2", width, 2 * width, 3, pad=1, rng=rng),
        BatchNorm("bn2", 2 * width),
        ReLU("relu2"),
        MaxPool2d("pool2", 2),
        Flatten("flatten"),
        Dense("fc1", 2 * width * spatial * spatial, hidden, rng=rng),
        BatchNorm("bn3", hidden),
        ReLU("relu3"),
        Dense("fc2", hidden, num_classes, bias=True, rng=rng),
    ]
    return ModelGraph("lenet", layers)
