"""
Differentiable ops over Tensor. Layouts are row-major NCHW for activations
and OIHW for convolution kernels; dense weights are F×G.
"""
from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.core.errors import DimensionError, InvalidTargetError
from src.core.tensor import Tensor, as_tensor, record


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ─── ELEMENTWISE ──────────────────────────────────────────────────

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def _backward(g, saved):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", (a, b), a.data + b.data, _backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def _backward(g, saved):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record("sub", (a, b), a.data - b.data, _backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def _backward(g, saved):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record("mul", (a, b), a.data * b.data, _backward)


def sum(x: Tensor) -> Tensor:
    def _backward(g, saved):
        return (np.broadcast_to(g, x.shape).copy(),)

    return record("sum", (x,), np.asarray(x.data.sum(), dtype=x.dtype), _backward)


def mean(x: Tensor) -> Tensor:
    n = x.size

    def _backward(g, saved):
        return (np.broadcast_to(g / n, x.shape).astype(x.dtype),)

    return record("mean", (x,), np.asarray(x.data.mean(), dtype=x.dtype), _backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    def _backward(g, saved):
        return (g.reshape(x.shape),)

    return record("reshape", (x,), x.data.reshape(tuple(shape)), _backward)


def flatten(x: Tensor) -> Tensor:
    return reshape(x, (x.shape[0], -1))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def _backward(g, saved):
        return (np.where(saved["mask"], g, 0).astype(g.dtype),)

    return record("relu", (x,), np.where(mask, x.data, 0).astype(x.dtype), _backward, {"mask": mask})


# ─── CONVOLUTION / DENSE ──────────────────────────────────────────

def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> Tuple[np.ndarray, int, int]:
    """Return windows as (N*OH*OW, C*KH*KW) plus the output height and width."""
    n, c, h, w = x.shape
    oh, ow = conv_output_size(h, kh, stride, pad), conv_output_size(w, kw, stride, pad)
    if oh < 1 or ow < 1:
        raise DimensionError(f"kernel {kh}x{kw} with pad {pad} does not fit input of shape {x.shape}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :oh, :ow]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    return np.ascontiguousarray(cols), oh, ow


def col2im(dcols: np.ndarray, x_shape, kh: int, kw: int, stride: int, pad: int, oh: int, ow: int) -> np.ndarray:
    n, c, h, w = x_shape
    dcols = dcols.reshape(n, oh, ow, c, kh, kw)
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    if pad:
        dxp = dxp[:, :, pad:pad + h, pad:pad + w]
    return dxp


def check_conv_geometry(x_shape, w_shape, stride: int, pad: int) -> None:
    if len(x_shape) != 4 or len(w_shape) != 4:
        raise DimensionError(f"conv2d expects NCHW input and OIHW weight, got {tuple(x_shape)} and {tuple(w_shape)}")
    if x_shape[1] != w_shape[1]:
        raise DimensionError(
            f"conv2d channel mismatch: input {tuple(x_shape)} has {x_shape[1]} channels, "
            f"weight {tuple(w_shape)} expects {w_shape[1]}"
        )
    if stride < 1 or pad < 0:
        raise DimensionError(f"conv2d needs stride >= 1 and pad >= 0, got stride={stride} pad={pad}")


def conv2d(x: Tensor, w: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    check_conv_geometry(x.shape, w.shape, stride, pad)
    n = x.shape[0]
    o, _, kh, kw = w.shape
    cols, oh, ow = im2col(x.data, kh, kw, stride, pad)
    wmat = w.data.reshape(o, -1)
    out = (cols @ wmat.T).reshape(n, oh, ow, o).transpose(0, 3, 1, 2)

    def _backward(g, saved):
        g2 = g.transpose(0, 2, 3, 1).reshape(-1, o)
        dw = (g2.T @ saved["cols"]).reshape(w.shape) if w.requires_grad else None
        dx = None
        if x.requires_grad:
            dx = col2im(g2 @ wmat, x.shape, kh, kw, stride, pad, oh, ow)
        return dx, dw

    return record("conv2d", (x, w), np.ascontiguousarray(out), _backward, {"cols": cols})


def dense(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise DimensionError(f"dense inner dimensions disagree: input {x.shape}, weight {w.shape}")
    out = x.data @ w.data
    inputs = (x, w)
    if b is not None:
        if b.shape != (w.shape[1],):
            raise DimensionError(f"dense bias shape {b.shape} does not match weight {w.shape}")
        out = out + b.data
        inputs = (x, w, b)

    def _backward(g, saved):
        grads = [g @ w.data.T, x.data.T @ g]
        if b is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    return record("dense", inputs, out, _backward)


# ─── NORMALIZATION ────────────────────────────────────────────────

def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
    update_stats: bool = True,
) -> Tensor:
    """Batch norm over axis 1 for rank-2 (N,F) or rank-4 (N,C,H,W) input; running stats update in place."""
    if x.ndim not in (2, 4):
        raise DimensionError(f"batchnorm expects rank 2 or 4 input, got shape {x.shape}")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,) or running_mean.shape != (c,) or running_var.shape != (c,):
        raise DimensionError(f"batchnorm has {gamma.shape[0]} channels of parameters, input has {c}")
    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    bshape = (1, c) if x.ndim == 2 else (1, c, 1, 1)
    m = x.size // c

    if training:
        if x.shape[0] < 2:
            raise DimensionError("batchnorm in train mode needs a batch of at least 2 samples")
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if update_stats:
            running_mean *= 1 - momentum
            running_mean += momentum * mu
            running_var *= 1 - momentum
            running_var += momentum * var * m / max(m - 1, 1)
    else:
        mu, var = running_mean, running_var

    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    xhat = (x.data - mu.reshape(bshape)) * inv_std.reshape(bshape)
    out = gamma.data.reshape(bshape) * xhat + beta.data.reshape(bshape)

    def _backward(g, saved):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gamma.data.reshape(bshape)
        if training:
            dx = inv_std.reshape(bshape) / m * (
                m * dxhat
                - dxhat.sum(axis=axes).reshape(bshape)
                - xhat * (dxhat * xhat).sum(axis=axes).reshape(bshape)
            )
        else:
            dx = dxhat * inv_std.reshape(bshape)
        return dx.astype(x.dtype), dgamma, dbeta

    return record("batchnorm", (x, gamma, beta), out.astype(x.dtype), _backward)


# ─── POOLING / SHORTCUT ───────────────────────────────────────────

def max_pool2d(x: Tensor, kernel: int, stride: Optional[int] = None) -> Tensor:
    stride = stride or kernel
    n, c, h, w = x.shape
    oh, ow = conv_output_size(h, kernel, stride, 0), conv_output_size(w, kernel, stride, 0)
    if oh < 1 or ow < 1:
        raise DimensionError(f"max_pool2d kernel {kernel} does not fit input of shape {x.shape}")
    windows = sliding_window_view(x.data, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :oh, :ow]
    flat = windows.reshape(n, c, oh, ow, kernel * kernel)
    idx = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def _backward(g, saved):
        dx = np.zeros_like(x.data)
        for t in range(kernel * kernel):
            i, j = divmod(t, kernel)
            dx[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += np.where(idx == t, g, 0)
        return (dx,)

    return record("max_pool2d", (x,), np.ascontiguousarray(out), _backward)


def global_avg_pool2d(x: Tensor) -> Tensor:
    n, c, h, w = x.shape

    def _backward(g, saved):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).astype(x.dtype),)

    return record("global_avg_pool2d", (x,), x.data.mean(axis=(2, 3)), _backward)


def shortcut_pad(x: Tensor, out_channels: int, stride: int) -> Tensor:
    """Parameter-free residual path: spatial subsample by stride, zero-pad channels."""
    c = x.shape[1]
    if out_channels < c:
        raise DimensionError(f"shortcut cannot shrink {c} channels to {out_channels}")
    before = (out_channels - c) // 2
    after = out_channels - c - before
    sub_sampled = x.data[:, :, ::stride, ::stride]
    out = np.pad(sub_sampled, ((0, 0), (before, after), (0, 0), (0, 0)))

    def _backward(g, saved):
        dx = np.zeros_like(x.data)
        dx[:, :, ::stride, ::stride] = g[:, before:before + c]
        return (dx,)

    return record("shortcut_pad", (x,), out, _backward)


# ─── LOSS ─────────────────────────────────────────────────────────

def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean negative log-softmax of the target logits, stabilized by max-subtraction."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise DimensionError(f"logits {logits.shape} and targets {targets.shape} disagree")
    n, c = logits.shape
    if targets.size and (targets.min() < 0 or targets.max() >= c):
        bad = targets[(targets < 0) | (targets >= c)][0]
        raise InvalidTargetError(f"target index {bad} out of range for {c} classes")

    z = logits.data.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(n), targets]))

    def _backward(g, saved):
        probs = np.exp(z - log_norm[:, None])
        probs[np.arange(n), targets] -= 1.0
        return ((probs * (float(g) / n)).astype(logits.dtype),)

    return record("softmax_cross_entropy", (logits,), np.asarray(loss, dtype=logits.dtype), _backward)

