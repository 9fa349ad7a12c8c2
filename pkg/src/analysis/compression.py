"""
Compression rate from real serialized bytes.

The headline rate counts the conv/dense entries (weights and the classifier
bias) of the full-precision file against the same entries of the ternary
file. The whole-file rate also counts the batch-norm tensors, which stay
full precision in both files.
"""
from typing import Optional, Set

from src.models.base import WeightMode
from src.models.graph import ModelGraph
from src.schemas.report_schema import CompressionReport
from src.serialization.model_file import TernModelFile, encode_entry, encode_file, model_entries


def theoretical_rate(t_ex: int) -> float:
    return 32.0 / (2.0 * t_ex)


def _layer_entry_names(model: ModelGraph) -> Set[str]:
    names = set()
    for layer in model.quantizable_layers():
        names.update(name for name, _ in layer.parameters())
    return names


def _entry_bytes(model_file: TernModelFile, names: Set[str]) -> int:
    return sum(len(encode_entry(e)) for e in model_file.entries if e.name in names)


def compression_rate(model: ModelGraph, t_ex: Optional[int] = None) -> CompressionReport:
    fp_file = model_entries(model, WeightMode.FP)
    tern_file = model_entries(model, WeightMode.TERNARY)
    if t_ex is None:
        t_ex = max(
            (len(layer.policy.betas) for layer in model.quantizable_layers() if layer.policy.quantized), default=1
        )
    names = _layer_entry_names(model)
    fp_bytes = _entry_bytes(fp_file, names)
    tern_bytes = _entry_bytes(tern_file, names)
    file_fp = len(encode_file(fp_file))
    file_tern = len(encode_file(tern_file))
    return CompressionReport(
        t_ex=t_ex,
        fp_bytes=fp_bytes,
        tern_bytes=tern_bytes,
        rate=fp_bytes / tern_bytes if tern_bytes else 1.0,
        file_fp_bytes=file_fp,
        file_tern_bytes=file_tern,
        file_rate=file_fp / file_tern,
        theoretical_rate=theoretical_rate(t_ex),
    )
