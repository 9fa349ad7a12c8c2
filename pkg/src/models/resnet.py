"""
ResNet builders.

CIFAR-style ResNet-20/32/44/56: 3×3 stem, three stages of (depth-2)/6 basic
blocks at widths 16/32/64, parameter-free type-A shortcuts, global average
pool, classifier with bias.

ResNet-18-style: basic blocks [2, 2, 2, 2] at widths w/2w/4w/8w with type-B
(1×1 conv + batch norm) projection shortcuts wherever the shape changes.
"""
from typing import List

import numpy as np

from src.core.errors import ConfigError
from src.models.activation import GlobalAvgPool, ReLU
from src.models.base import Layer
from src.models.batchnorm import BatchNorm
from src.models.conv import Conv2d
from src.models.dense import Dense
from src.models.graph import ModelGraph
from src.models.residual import ResidualBlock

CIFAR_DEPTHS = (20, 32, 44, 56)


def _basic_body(prefix: str, in_ch: int, out_ch: int, stride: int, rng: np.random.Generator) -> List[Layer]:
    return [
        Conv2d(f"{prefix}.conv1", in_ch, out_ch, 3, stride=stride, pad=1, rng=rng),
        BatchNorm(f"{prefix}.bn1", out_ch),
        ReLU(f"{prefix}.relu1"),
        Conv2d(f"{prefix}.conv2", out_ch, out_ch, 3, stride=1, pad=1, rng=rng),
        BatchNorm(f"{prefix}.bn2", out_ch),
    ]


def build_resnet(
    depth: int = 20,
    in_channels: int = 3,
    num_classes: int = 10,
    width: int = 16,
    seed: int = 0,
) -> ModelGraph:
    if depth not in CIFAR_DEPTHS:
        raise ConfigError(f"CIFAR ResNet depth must be one of {CIFAR_DEPTHS}, got {depth}")
    rng = np.random.default_rng(seed)
    n = (depth - 2) // 6
    layers: List[Layer] = [
        Conv2d("conv1", in_channels, width, 3, pad=1, rng=rng),
        BatchNorm("bn1", width),
        ReLU("relu1"),
    ]
    in_ch = width
    for stage, out_ch in enumerate((width, 2 * width, 4 * width), start=1):
        for b in range(n):
            stride = 2 if (stage > 1 and b == 0) else 1
            prefix = f"stage{stage}.block{b}"
            shortcut = "A" if (stride != 1 or in_ch != out_ch) else "identity"
            layers.append(ResidualBlock(
                prefix, _basic_body(prefix, in_ch, out_ch, stride, rng),
                shortcut=shortcut, out_channels=out_ch, stride=stride,
            ))
            in_ch = out_ch
    layers += [GlobalAvgPool("pool"), Dense("fc", in_ch, num_classes, bias=True, rng=rng)]
    return ModelGraph(f"resnet{depth}", layers)


def build_resnet18(
    in_channels: int = 3,
    num_classes: int = 10,
    width: int = 64,
    seed: int = 0,
) -> ModelGraph:
    rng = np.random.default_rng(seed)
    layers: List[Layer] = [
        Conv2d("conv1", in_channels, width, 3, pad=1, rng=rng),
        BatchNorm("bn1", width),
        ReLU("relu1"),
    ]
    in_ch = width
    for stage, out_ch in enumerate((width, 2 * width, 4 * width, 8 * width), start=1):
        for b in range(2):
            stride = 2 if (stage > 1 and b == 0) else 1
            prefix = f"stage{stage}.block{b}"
            projection = None
            shortcut = "identity"
            if stride != 1 or in_ch != out_ch:
                shortcut = "B"
                projection = [
                    Conv2d(f"{prefix}.proj", in_ch, out_ch, 1, stride=stride, rng=rng),
                    BatchNorm(f"{prefix}.proj_bn", out_ch),
                ]
            layers.append(ResidualBlock(
                prefix, _basic_body(prefix, in_ch, out_ch, stride, rng),
                shortcut=shortcut, out_channels=out_ch, stride=stride, projection=projection,
            ))
            in_ch = out_ch
    layers += [GlobalAvgPool("pool"), Dense("fc", in_ch, num_classes, bias=True, rng=rng)]
    return ModelGraph("resnet18", layers)
