import enum
from typing import Optional

from pydantic import BaseModel, Field


class Architecture(str, enum.Enum):
    LENET = "lenet"
    RESNET20 = "resnet20"
    RESNET32 = "resnet32"
    RESNET44 = "resnet44"
    RESNET56 = "resnet56"
    RESNET18 = "resnet18"


class ModelSpec(BaseModel):
    arch: Architecture = Architecture.LENET
    # None takes the value from the dataset
    num_classes: Optional[int] = Field(None, ge=2)
    in_channels: Optional[int] = Field(None, ge=1)
    image_size: Optional[int] = Field(None, ge=4)
    # base channel count; None picks the architecture default (LeNet 16, CIFAR ResNet 16, ResNet-18 64)
    width: Optional[int] = Field(None, ge=1)
    seed: int = 0

    model_config = {"extra": "forbid"}

    def resolved(self, image_shape, num_classes: int) -> "ModelSpec":
        return self.model_copy(update={
            "in_channels": self.in_channels or int(image_shape[0]),
            "image_size": self.image_size or int(image_shape[1]),
            "num_classes": self.num_classes or int(num_classes),
        })
