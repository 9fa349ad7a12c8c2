import enum
from typing import List

from pydantic import BaseModel, field_validator, model_validator

from src.quant.rel_expansion import check_betas


class PolicyKind(str, enum.Enum):
    FP = "fp"
    TERN = "tern"
    REL = "rel"


class QuantPolicy(BaseModel):
    kind: PolicyKind = PolicyKind.FP
    betas: List[float] = []

    model_config = {"frozen": True}

    @field_validator("betas")
    @classmethod
    def _betas_ascending(cls, v: List[float]) -> List[float]:
        return list(check_betas(v)) if v else v

    @model_validator(mode="after")
    def _betas_match_kind(self):
        if self.kind == PolicyKind.FP and self.betas:
            raise ValueError("full-precision policy takes no threshold factors")
        if self.kind == PolicyKind.TERN and len(self.betas) != 1:
            raise ValueError("ternary policy takes exactly one threshold factor")
        if self.kind == PolicyKind.REL and len(self.betas) < 1:
            raise ValueError("REL policy needs at least one threshold factor")
        return self

    @classmethod
    def fp(cls) -> "QuantPolicy":
        return cls(kind=PolicyKind.FP)

    @classmethod
    def tern(cls, beta: float) -> "QuantPolicy":
        return cls(kind=PolicyKind.TERN, betas=[beta])

    @classmethod
    def rel(cls, betas) -> "QuantPolicy":
        return cls(kind=PolicyKind.REL, betas=list(betas))

    @property
    def quantized(self) -> bool:
        return self.kind != PolicyKind.FP
