import enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from src.quant.rel_expansion import check_betas, default_betas


class AblationMode(str, enum.Enum):
    FP = "fp"
    TW = "tw"
    TW_ICS = "tw-ics"
    TW_FT = "tw-ft"
    TW_ICS_FT = "tw-ics-ft"
    TW_ICS_FT_REL = "tw-ics-ft-rel"

    @property
    def quantized(self) -> bool:
        return self != AblationMode.FP

    @property
    def ics(self) -> bool:
        return "ics" in self.value

    @property
    def fine_tune(self) -> bool:
        return "ft" in self.value

    @property
    def rel(self) -> bool:
        return self.value.endswith("rel")


class OptimizerKind(str, enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


class Schedule(str, enum.Enum):
    CUSTOM = "custom"
    CIFAR = "cifar"
    IMAGENET_FP = "imagenet-fp"
    IMAGENET_FT = "imagenet-ft"


class LayerSide(str, enum.Enum):
    FP = "fp"
    TERN = "tern"


class RelInit(str, enum.Enum):
    FP = "fp"
    TERNARY = "ternary"


SCHEDULE_PRESETS = {
    Schedule.CIFAR: dict(optimizer=OptimizerKind.SGD, lr=0.1, milestones=[80, 120, 160], factors=[0.1], weight_decay=1e-4),
    Schedule.IMAGENET_FP: dict(
        optimizer=OptimizerKind.SGD, lr=0.1, milestones=[45, 65], factors=[0.1], weight_decay=1e-4, batch_size=256,
    ),
    Schedule.IMAGENET_FT: dict(
        optimizer=OptimizerKind.ADAM, lr=1e-4, milestones=[30, 40, 45], factors=[0.2, 0.2, 0.5],
        weight_decay=5e-6, batch_size=256,
    ),
}

FP_WEIGHT_DECAY = 1e-4
FT_WEIGHT_DECAY = 5e-6


class TrainConfig(BaseModel):
    mode: AblationMode = AblationMode.FP
    schedule: Schedule = Schedule.CUSTOM
    optimizer: OptimizerKind = OptimizerKind.SGD
    lr: float = Field(0.1, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: Optional[float] = Field(None, ge=0.0)
    milestones: List[int] = []
    factors: List[float] = [0.1]
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(64, ge=1)
    seed: int = 0
    betas: Optional[List[float]] = None
    t_ex: int = Field(1, ge=1)
    first_last: LayerSide = LayerSide.TERN
    pretrained: Optional[str] = None
    rel_init: RelInit = RelInit.FP
    update_bn_stats: bool = True
    restore_best: bool = True
    # share of the training split held out to pick the best epoch; 0 selects on training data
    val_fraction: float = Field(0.1, ge=0.0, lt=1.0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _apply_schedule(self):
        if self.schedule != Schedule.CUSTOM:
            for key, value in SCHEDULE_PRESETS[self.schedule].items():
                if key not in self.model_fields_set:
                    setattr(self, key, value)
        if self.weight_decay is None:
            self.weight_decay = FT_WEIGHT_DECAY if self.mode.fine_tune else FP_WEIGHT_DECAY
        return self

    @model_validator(mode="after")
    def _check_mode(self):
        if self.milestones != sorted(set(self.milestones)):
            raise ValueError(f"milestones must be strictly increasing, got {self.milestones}")
        if len(self.factors) not in (1, len(self.milestones) or 1):
            raise ValueError("give one decay factor, or one per milestone")
        if self.mode.fine_tune and not self.pretrained:
            raise ValueError(f"mode '{self.mode.value}' fine-tunes and needs a pretrained checkpoint")
        if self.mode.rel:
            if self.betas is None:
                self.betas = list(default_betas(self.t_ex))
            if len(self.betas) != self.t_ex:
                raise ValueError(f"{len(self.betas)} threshold factors given for T_ex={self.t_ex}")
        else:
            if self.t_ex != 1:
                raise ValueError(f"T_ex={self.t_ex} needs the REL mode")
            if self.betas is None:
                self.betas = list(default_betas(1))
            if len(self.betas) != 1:
                raise ValueError(f"mode '{self.mode.value}' takes a single threshold factor")
        self.betas = list(check_betas(self.betas))
        return self
