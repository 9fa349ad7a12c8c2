"""
Dense tensor with reverse-mode automatic differentiation.

Every differentiable op appends a TapeNode to the module tape; backward()
walks the tape in exact reverse insertion order. Forward/backward over a
tape is single-threaded by contract.
"""
from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.core import config
from src.core.errors import DimensionError, NumericError, TapeError

logger = logging.getLogger(__name__)

BackwardFn = Callable[[np.ndarray, dict], Sequence[Optional[np.ndarray]]]

_default_dtype = np.dtype(np.float32)
_grad_enabled = True


def get_default_dtype() -> np.dtype:
    return _default_dtype


@contextlib.contextmanager
def precision(dtype) -> Iterator[None]:
    """Switch the working precision; float64 is meant for gradient checks."""
    global _default_dtype
    previous = _default_dtype
    _default_dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _default_dtype = previous


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.array(data, dtype=_default_dtype)
        if arr.ndim > 4:
            raise DimensionError(f"tensor rank must be at most 4, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite value in tensor {name or ''}".rstrip())
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name
        self.grad: Optional[np.ndarray] = None
        self._node: Optional[TapeNode] = None
        self._generation = -1

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> "Tensor":
        out = cls.__new__(cls)
        out.data = arr
        out.requires_grad = requires_grad
        out.name = None
        out.grad = None
        out._node = None
        out._generation = -1
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    # ─── OPERATORS ────────────────────────────────────────────────
    def __add__(self, other):
        from src.core import functional as F
        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from src.core import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from src.core import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from src.core import functional as F
        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from src.core import functional as F
        return F.mul(self, -1.0)

    def sum(self):
        from src.core import functional as F
        return F.sum(self)

    def mean(self):
        from src.core import functional as F
        return F.mean(self)

    def reshape(self, *shape):
        from src.core import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"


@dataclass
class TapeNode:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn
    saved: dict = field(default_factory=dict)


class Tape:
    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.generation = 0

    def record(self, node: TapeNode) -> None:
        self.nodes.append(node)

    def reset(self) -> None:
        self.nodes = []
        self.generation += 1

    def __len__(self) -> int:
        return len(self.nodes)


_tape = Tape()


def get_tape() -> Tape:
    return _tape


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def record(
    op: str,
    inputs: Sequence[Tensor],
    out_data: np.ndarray,
    backward_fn: BackwardFn,
    saved: Optional[dict] = None,
) -> Tensor:
    """Wrap an op result and append its node to the tape when any input needs a gradient."""
    if config.DEBUG_CHECKS and not np.all(np.isfinite(out_data)):
        raise NumericError(f"non-finite output from op '{op}'")
    requires = _grad_enabled and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(out_data, requires_grad=requires)
    if requires:
        node = TapeNode(op=op, inputs=tuple(inputs), output=out, backward_fn=backward_fn, saved=saved or {})
        _tape.record(node)
        out._node = node
        out._generation = _tape.generation
    return out


def backward(loss: Tensor) -> None:
    """Populate .grad on every leaf reachable from loss and free the tape."""
    if loss.size != 1:
        raise DimensionError(f"backward requires a scalar loss, got shape {loss.shape}")
    if not _tape.nodes:
        raise TapeError("tape is empty; run a forward pass before backward")
    if loss._node is None or loss._generation != _tape.generation:
        raise TapeError("backward called twice without re-running forward")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_tape.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        input_grads = node.backward_fn(upstream, node.saved)
        for inp, g in zip(node.inputs, input_grads):
            if g is None or not inp.requires_grad:
                continue
            if g.shape != inp.shape:
                raise DimensionError(
                    f"op '{node.op}' produced gradient of shape {g.shape} for input of shape {inp.shape}"
                )
            if inp.is_leaf:
                inp.grad = g.copy() if inp.grad is None else inp.grad + g
            else:
                key = id(inp)
                grads[key] = g if key not in grads else grads[key] + g
    _tape.reset()
