"""Nonzero ratios of ternary codes: per layer, per expansion branch, and on average."""
from typing import Iterable, List, Optional, Sequence, Union

from src.models.graph import ModelGraph
from src.quant.rel_expansion import RELStack
from src.quant.ternarizer import TernaryTensor
from src.schemas.report_schema import DensityChange, DensityReport, LayerDensity


def _row(name: str, kind: str, branch: int, t: TernaryTensor) -> LayerDensity:
    return LayerDensity(name=name, kind=kind, branch=branch, nonzero=t.nonzero, total=t.size, density=t.density)


def _report(rows: List[LayerDensity]) -> DensityReport:
    total = sum(r.total for r in rows)
    average = sum(r.nonzero for r in rows) / total if total else 0.0
    return DensityReport(layers=rows, average=average)


def density(target: Union[ModelGraph, TernaryTensor, RELStack], name: str = "tensor") -> DensityReport:
    """Density report; the average is weighted by parameter count."""
    if isinstance(target, TernaryTensor):
        return _report([_row(name, "tensor", 0, target)])
    if isinstance(target, RELStack):
        return _report([_row(name, "rel", k, t) for k, t in enumerate(target.layers)])
    rows = []
    for layer in target.quantizable_layers():
        for k, t in enumerate(layer.quantize()):
            rows.append(_row(layer.name, layer.kind, k, t))
    return _report(rows)


def compare_density(
    before: DensityReport,
    after: DensityReport,
    names: Optional[Iterable[str]] = None,
) -> List[DensityChange]:
    wanted = set(names) if names is not None else None
    after_rows = {(r.name, r.branch): r for r in after.layers}
    changes = []
    for row in before.layers:
        if wanted is not None and row.name not in wanted:
            continue
        other = after_rows.get((row.name, row.branch))
        if other is None:
            continue
        changes.append(DensityChange(
            name=row.name, branch=row.branch, before=row.density, after=other.density,
            delta=other.density - row.density,
        ))
    return changes


def first_last_names(model: ModelGraph) -> Sequence[str]:
    layers = model.quantizable_layers()
    if not layers:
        return []
    return [layers[0].name] if len(layers) == 1 else [layers[0].name, layers[-1].name]
