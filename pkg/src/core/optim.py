"""SGD with momentum, Adam, and a multi-step learning-rate schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.core.errors import ConfigError, NumericError
from src.core.tensor import Tensor

NamedParams = Sequence[Tuple[str, Tensor]]


@dataclass
class OptimizerState:
    lr: float
    weight_decay: float = 0.0
    step: int = 0
    buffers: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)


def _check_lr(lr: float) -> float:
    if not math.isfinite(lr) or lr < 0:
        raise ConfigError(f"learning rate must be finite and non-negative, got {lr}")
    return float(lr)


class Optimizer:
    def __init__(self, params: NamedParams, lr: float, weight_decay: float = 0.0):
        if weight_decay < 0:
            raise ConfigError(f"weight decay must be non-negative, got {weight_decay}")
        self.params: List[Tuple[str, Tensor]] = list(params)
        self.state = OptimizerState(lr=_check_lr(lr), weight_decay=float(weight_decay))

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = _check_lr(value)

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.grad = None

    def step(self) -> None:
        """Update every parameter that has a gradient; nothing changes if any gradient is non-finite."""
        for name, p in self.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise NumericError(f"non-finite gradient for parameter '{name}'")
        self.state.step += 1
        for name, p in self.params:
            if p.grad is None:
                continue
            g = p.grad
            if self.state.weight_decay:
                g = g + self.state.weight_decay * p.data
            buffers = self.state.buffers.setdefault(name, {})
            p.data -= self._update(g, buffers).astype(p.data.dtype)

    def _update(self, g: np.ndarray, buffers: Dict[str, np.ndarray]) -> np.ndarray:
        raise NotImplementedError


class SGD(Optimizer):
    def __init__(self, params: NamedParams, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
        super().__init__(params, lr, weight_decay)
        self.momentum = momentum

    def _update(self, g, buffers):
        if self.momentum:
            v = buffers.get("momentum")
            v = g.copy() if v is None else self.momentum * v + g
            buffers["momentum"] = v
            g = v
        return self.state.lr * g


class Adam(Optimizer):
    def __init__(
        self,
        params: NamedParams,
        lr: float = 1e-3,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        super().__init__(params, lr, weight_decay)
        self.betas = betas
        self.eps = eps

    def _update(self, g, buffers):
        b1, b2 = self.betas
        m = buffers.get("exp_avg", np.zeros_like(g))
        v = buffers.get("exp_avg_sq", np.zeros_like(g))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        buffers["exp_avg"], buffers["exp_avg_sq"] = m, v
        t = self.state.step
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        return self.state.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class MultiStepLR:
    """lr(epoch) = base_lr × product of factors whose milestone is <= epoch."""

    def __init__(self, optimizer: Optimizer, milestones: Sequence[int], factors: Sequence[float]):
        milestones = list(milestones)
        factors = list(factors)
        if len(factors) == 1:
            factors = factors * len(milestones)
        if len(factors) != len(milestones):
            raise ConfigError(f"{len(milestones)} milestones but {len(factors)} lr factors")
        if milestones != sorted(milestones):
            raise ConfigError(f"lr milestones must be ascending, got {milestones}")
        self.optimizer = optimizer
        self.base_lr = optimizer.lr
        self.milestones = milestones
        self.factors = factors

    def lr_at(self, epoch: int) -> float:
        lr = self.base_lr
        for milestone, factor in zip(self.milestones, self.factors):
            if epoch >= milestone:
                lr *= factor
        return lr

    def step(self, epoch: int) -> float:
        self.optimizer.lr = self.lr_at(epoch)
        return self.optimizer.lr
