"""
Text weight dump, for checkpoints trained elsewhere:

    <name> TAB <d0>x<d1>x... TAB <v0>,<v1>,...

one tensor per line, values in row-major order; blank lines and lines
starting with `#` are ignored.
"""
import math
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from src.core.errors import DataIOError, ParseError


def parse_weight_dump(text: str, source: str = "<dump>") -> "OrderedDict[str, np.ndarray]":
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    offset = 0
    for lineno, line in enumerate(text.splitlines(keepends=True), start=1):
        start, offset = offset, offset + len(line.encode("utf-8"))
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) != 3:
            raise ParseError(f"{source}:{lineno}: expected 3 tab-separated fields, got {len(fields)}", offset=start)
        name, dims, values = fields
        try:
            shape = tuple(int(d) for d in dims.split("x"))
            data = np.array([float(v) for v in values.split(",")], dtype=np.float32)
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}", offset=start)
        if any(d < 1 for d in shape) or data.size != math.prod(shape):
            raise ParseError(f"{source}:{lineno}: shape {dims} does not match {data.size} values", offset=start)
        if name in tensors:
            raise ParseError(f"{source}:{lineno}: tensor '{name}' appears twice", offset=start)
        tensors[name] = data.reshape(shape)
    return tensors


def read_weight_dump(path: Union[str, Path]) -> "OrderedDict[str, np.ndarray]":
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataIOError(f"cannot read weight dump {path}: {exc}")
    return parse_weight_dump(text, source=str(path))


def format_weight_dump(state: Mapping[str, np.ndarray]) -> str:
    lines = []
    for name, value in state.items():
        value = np.asarray(value, dtype=np.float32)
        dims = "x".join(str(d) for d in value.shape)
        lines.append(f"{name}\t{dims}\t{','.join(repr(float(v)) for v in value.reshape(-1))}")
    return "\n".join(lines) + "\n"


def write_weight_dump(path: Union[str, Path], state: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    try:
        path.write_text(format_weight_dump(state), encoding="utf-8")
    except OSError as exc:
        raise DataIOError(f"cannot write weight dump {path}: {exc.strerror or exc}")
    return path
