import enum
from typing import Dict, Optional

from pydantic import BaseModel, Field

from src.schemas.dataset_schema import DatasetSource
from src.schemas.model_schema import ModelSpec
from src.schemas.train_schema import TrainConfig


class RunConfig(BaseModel):
    model: ModelSpec = Field(default_factory=ModelSpec)
    data: DatasetSource = Field(default_factory=DatasetSource)
    train: TrainConfig = Field(default_factory=TrainConfig)

    model_config = {"extra": "forbid", "protected_namespaces": ()}


class Subcommand(str, enum.Enum):
    TRAIN = "train"
    TERNARIZE = "ternarize"
    EVAL = "eval"
    ANALYZE = "analyze"
    EXPORT = "export"


class CliInvocation(BaseModel):
    subcommand: Subcommand
    config_path: Optional[str] = None
    overrides: Dict[str, str] = {}
    out_dir: str = "out"
    seed: Optional[int] = None
    model_path: Optional[str] = None
    fpga: Dict[str, int] = {}

    model_config = {"protected_namespaces": ()}
