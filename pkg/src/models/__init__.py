from src.models.base import ForwardContext, Layer, WeightMode
from src.models.batchnorm import BatchNorm, BatchNormParams
from src.models.conv import Conv2d
from src.models.dense import Dense
from src.models.activation import Flatten, GlobalAvgPool, MaxPool2d, ReLU
from src.models.residual import ResidualBlock
from src.models.quantized import QuantizedLayer
from src.models.graph import ModelGraph
from src.models.lenet import build_lenet
from src.models.resnet import build_resnet, build_resnet18
from src.models.builder import build_model

__all__ = [
    "ForwardContext",
    "Layer",
    "WeightMode",
    "BatchNorm",
    "BatchNormParams",
    "Conv2d",
    "Dense",
    "Flatten",
    "GlobalAvgPool",
    "MaxPool2d",
    "ReLU",
    "ResidualBlock",
    "QuantizedLayer",
    "ModelGraph",
    "build_lenet",
    "build_resnet",
    "build_resnet18",
    "build_model",
]
