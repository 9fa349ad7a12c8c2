import enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class DatasetKind(str, enum.Enum):
    CIFAR10 = "cifar10"
    MNIST = "mnist"
    SYNTHETIC = "synthetic"


class DatasetSource(BaseModel):
    kind: DatasetKind = DatasetKind.SYNTHETIC
    # directory holding the published files; falls back to TERN_DATA_DIR
    path: Optional[str] = None
    seed: int = 0
    normalize: bool = True
    # random crop with 4-pixel pad + horizontal flip, training split only
    augment: bool = False
    # keep only the first N records of each split
    limit: Optional[int] = Field(None, ge=1)

    # synthetic generator
    num_classes: int = Field(10, ge=2)
    image_shape: List[int] = [1, 8, 8]
    train_size: int = Field(1000, ge=1)
    test_size: int = Field(1000, ge=1)
    separation: float = Field(1.0, gt=0.0)
    noise: float = Field(1.0, gt=0.0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.image_shape) != 3 or min(self.image_shape) < 1:
            raise ValueError(f"image_shape must be channels,height,width; got {self.image_shape}")
        return self
