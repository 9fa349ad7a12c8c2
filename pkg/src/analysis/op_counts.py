"""
Operation counts of one forward pass.

Full-precision path: every MAC is one multiply and one add. Ternary path:
one add/sub per nonzero code touched, and one α multiply per output element
and branch. Layers kept full precision count as full-precision MACs in both
paths.
"""
import math
from typing import Tuple

import numpy as np

from src.analysis.fpga_cost import fpga_cost
from src.models.base import WeightMode
from src.models.conv import Conv2d
from src.models.graph import ModelGraph
from src.quant.ternary_kernels import OpCounter
from src.schemas.report_schema import CostReport, LayerCost


def _as_batch_shape(input_shape) -> Tuple[int, ...]:
    shape = tuple(int(d) for d in input_shape)
    return (1,) + shape if len(shape) == 3 else shape


def op_counts(model: ModelGraph, input_shape, with_fpga: bool = True) -> CostReport:
    shape = _as_batch_shape(input_shape)
    traced = model.trace_shapes(shape)
    rows = []
    for layer in model.quantizable_layers():
        in_shape, out_shape = traced[layer.name]
        outputs = math.prod(out_shape)
        if isinstance(layer, Conv2d):
            positions = out_shape[0] * out_shape[2] * out_shape[3]
        else:
            positions = out_shape[0]
        fan = layer.weight.size
        macs = positions * fan
        branches = layer.quantize()
        if branches:
            nonzero = sum(t.nonzero for t in branches)
            tern_add_sub = positions * nonzero
            tern_muls = outputs * len(branches)
            layer_density = nonzero / (fan * len(branches))
        else:
            tern_add_sub, tern_muls, layer_density = macs, macs, 1.0
        rows.append(LayerCost(
            name=layer.name,
            kind=layer.kind,
            macs=macs,
            output_elements=outputs,
            density=layer_density,
            fp_muls=macs,
            fp_adds=macs,
            tern_add_sub=tern_add_sub,
            tern_muls=tern_muls,
        ))
    report = CostReport(
        input_shape=list(shape),
        layers=rows,
        fp_muls=sum(r.fp_muls for r in rows),
        fp_adds=sum(r.fp_adds for r in rows),
        tern_add_sub=sum(r.tern_add_sub for r in rows),
        tern_muls=sum(r.tern_muls for r in rows),
    )
    if with_fpga:
        report.fpga = fpga_cost(report.fp_muls, report.tern_add_sub)
    return report


def measured_op_counts(model: ModelGraph, images: np.ndarray) -> OpCounter:
    """Counts recorded by the packed kernels during a ternary-mode forward."""
    counter = OpCounter()
    model.predict(images, WeightMode.TERNARY, counter=counter)
    return counter
