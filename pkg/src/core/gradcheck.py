"""Central finite-difference check of tape gradients."""
from typing import Callable, Dict, Sequence

import numpy as np

from src.core.tensor import Tensor, backward, no_grad


def numerical_gradient(fn: Callable[[], Tensor], param: Tensor, step: float = 1e-3) -> np.ndarray:
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        with no_grad():
            flat[i] = original + step
            plus = fn().item()
            flat[i] = original - step
            minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2 * step)
    return grad


def gradcheck(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-3,
    rtol: float = 1e-4,
    atol: float = 1e-6,
) -> Dict[str, float]:
    """Compare analytic and numeric gradients elementwise, |a - n| <= atol + rtol·max(|a|, |n|).

    Returns the worst relative error per parameter.

    Run under precision(np.float64): float32 differences are too coarse.
    """
    for p in params:
        p.grad = None
    backward(fn())
    analytic = [p.grad.copy() for p in params]

    errors = {}
    for k, (p, a) in enumerate(zip(params, analytic)):
        numeric = numerical_gradient(fn, p, step)
        scale = np.maximum(np.abs(a), np.abs(numeric))
        err = np.abs(a - numeric)
        rel = err / np.maximum(scale, atol)
        worst = float(rel.max()) if rel.size else 0.0
        errors[p.name or f"param{k}"] = worst
        if np.any(err > atol + rtol * scale):
            raise AssertionError(f"gradient mismatch for {p.name or f'param{k}'}: relative error {worst:.3e}")
    return errors
