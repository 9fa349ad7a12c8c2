from typing import List, Optional

from pydantic import BaseModel


# ─── DENSITY ──────────────────────────────────────────────────────

class LayerDensity(BaseModel):
    name: str
    kind: str
    branch: int = 0
    nonzero: int
    total: int
    density: float


class DensityReport(BaseModel):
    layers: List[LayerDensity] = []
    average: float = 0.0

    def layer(self, name: str, branch: int = 0) -> LayerDensity:
        for row in self.layers:
            if row.name == name and row.branch == branch:
                return row
        raise KeyError(name)


class DensityChange(BaseModel):
    name: str
    branch: int = 0
    before: float
    after: float
    delta: float


# ─── COST ─────────────────────────────────────────────────────────

class LayerCost(BaseModel):
    name: str
    kind: str
    macs: int
    output_elements: int
    density: float
    fp_muls: int
    fp_adds: int
    tern_add_sub: int
    tern_muls: int


class FpgaCost(BaseModel):
    fp_macs: int
    tern_macs: int
    fp_lut: int
    fp_dsp: int
    tern_lut: int
    tern_dsp: int
    available_lut: int
    available_dsp: int
    fp_lut_util: float
    fp_dsp_util: float
    tern_lut_util: float
    tern_dsp_util: float


class CostReport(BaseModel):
    input_shape: List[int]
    layers: List[LayerCost] = []
    fp_muls: int = 0
    fp_adds: int = 0
    tern_add_sub: int = 0
    tern_muls: int = 0
    fpga: Optional[FpgaCost] = None


class CompressionReport(BaseModel):
    t_ex: int
    fp_bytes: int
    tern_bytes: int
    rate: float
    file_fp_bytes: int
    file_tern_bytes: int
    file_rate: float
    theoretical_rate: float


# ─── TRAINING ─────────────────────────────────────────────────────

class Accuracy(BaseModel):
    top1: float
    top5: float
    k: int
    samples: int


class HistoryRow(BaseModel):
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_acc: float
