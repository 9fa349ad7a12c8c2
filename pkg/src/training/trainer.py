"""
Ternary training loop.

Every step: (1) threshold and scaling factor are recomputed from the current
full-precision weights (frozen once at start when ICS is off), (2) forward
and loss run on the ternary weights, (3) backward passes through the STE and
only the full-precision weights are updated.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from src.core import functional as F
from src.core.errors import ConfigError, DataIOError, DivergenceError, TernError
from src.core.optim import SGD, Adam, MultiStepLR, Optimizer
from src.core.tensor import Tensor, backward, get_tape
from src.datasets.loader import ArrayDataset
from src.models.base import ForwardContext, WeightMode
from src.models.graph import ModelGraph
from src.schemas.policy_schema import QuantPolicy
from src.schemas.report_schema import Accuracy, HistoryRow
from src.schemas.train_schema import OptimizerKind, TrainConfig
from src.serialization.model_file import (
    MAGIC,
    PolicyTag,
    adopt_file_policies,
    apply_model_file,
    read_model_file,
    save_model,
)
from src.serialization.weight_dump import read_weight_dump
from src.training.history import History
from src.training.policy import apply_policy

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "best_checkpoint.tern"


# ─── INITIALIZATION ───────────────────────────────────────────────

def init_from_pretrained(
    model: ModelGraph,
    checkpoint: Union[str, Path, Mapping[str, np.ndarray]],
    require_ternary: bool = False,
) -> ModelGraph:
    """Load full-precision weights from a state dict, a model file or a text weight dump.

    A ternary model file initializes each quantized weight with its dequantized
    value; the layer policies are left full precision.
    """
    if isinstance(checkpoint, Mapping):
        if require_ternary:
            raise ConfigError("starting from a ternary model needs a ternary model file")
        model.load_state_dict(checkpoint, strict=True)
        return model

    path = Path(checkpoint)
    try:
        with path.open("rb") as fh:
            head = fh.read(len(MAGIC))
    except OSError as exc:
        raise DataIOError(f"cannot read checkpoint {path}: {exc.strerror or exc}")

    if head != MAGIC:
        if require_ternary:
            raise ConfigError(f"{path} is a weight dump; starting from a ternary model needs a ternary model file")
        model.load_state_dict(read_weight_dump(path), strict=True)
        logger.info(f"initialized {model.name} from weight dump {path}")
        return model

    model_file = read_model_file(path)
    ternary = [e for e in model_file.entries if e.tag != PolicyTag.FP]
    if require_ternary and not ternary:
        raise ConfigError(f"{path} holds full-precision weights; a ternary model file is required")
    mode = adopt_file_policies(model_file, model)
    apply_model_file(model_file, model, mode)
    if ternary:
        for layer in model.quantizable_layers():
            layer.set_policy(QuantPolicy.fp())
    logger.info(f"initialized {model.name} from model file {path} ({len(ternary)} ternary entries)")
    return model


def build_optimizer(model: ModelGraph, config: TrainConfig) -> Optimizer:
    params = model.named_parameters()
    if config.optimizer == OptimizerKind.ADAM:
        return Adam(params, lr=config.lr, weight_decay=config.weight_decay)
    return SGD(params, lr=config.lr, momentum=config.momentum, weight_decay=config.weight_decay)


# ─── EVALUATION ───────────────────────────────────────────────────

def predict_logits(model: ModelGraph, dataset: ArrayDataset, weight_mode: WeightMode = WeightMode.FP) -> np.ndarray:
    return model.predict(dataset.images, WeightMode(weight_mode))


def accuracy_from_logits(logits: np.ndarray, labels: np.ndarray) -> Accuracy:
    k = min(5, logits.shape[1])
    ranked = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    top1 = float(np.mean(ranked[:, 0] == labels)) if len(labels) else 0.0
    topk = float(np.mean((ranked == labels[:, None]).any(axis=1))) if len(labels) else 0.0
    return Accuracy(top1=top1, top5=topk, k=k, samples=int(len(labels)))


def evaluate(model: ModelGraph, dataset: ArrayDataset, weight_mode: WeightMode = WeightMode.FP) -> Accuracy:
    """Top-1 and top-k (k = min(5, classes)) accuracy; ternary mode runs the packed kernels."""
    return accuracy_from_logits(predict_logits(model, dataset, weight_mode), dataset.labels)


# ─── TRAINER ──────────────────────────────────────────────────────

class Trainer:
    def __init__(self, model: ModelGraph, config: TrainConfig):
        self.model = model
        self.config = config
        self.weight_mode = WeightMode.TERNARY if config.mode.quantized else WeightMode.FP
        apply_policy(model, config)
        if config.mode.quantized and not config.mode.ics:
            for layer in model.quantizable_layers():
                if layer.policy.quantized:
                    layer.freeze_alphas()
        self.optimizer = build_optimizer(model, config)
        self.scheduler = MultiStepLR(self.optimizer, config.milestones, config.factors)
        self.context = ForwardContext(
            training=True,
            weight_mode=self.weight_mode,
            ics=config.mode.ics,
            update_bn_stats=config.update_bn_stats,
        )
        self.step_index = 0

    def train_step(self, images: np.ndarray, labels: np.ndarray) -> Tuple[float, int]:
        """One optimization step; returns the batch loss and the number of correct predictions."""
        self.optimizer.zero_grad()
        logits = self.model(Tensor(images), self.context)
        loss = F.softmax_cross_entropy(logits, labels)
        value = loss.item()
        if not np.isfinite(value):
            get_tape().reset()
            raise DivergenceError(self.step_index, value)
        backward(loss)
        self.optimizer.step()
        self.step_index += 1
        correct = int(np.sum(np.argmax(logits.data, axis=1) == labels))
        return value, correct

    def _snapshot(self) -> Tuple[dict, Dict[str, Optional[List[float]]]]:
        alphas = {layer.name: layer.frozen_alphas for layer in self.model.quantizable_layers()}
        return self.model.state_dict(), alphas

    def _restore(self, snapshot) -> None:
        state, alphas = snapshot
        self.model.load_state_dict(state)
        for layer in self.model.quantizable_layers():
            layer.frozen_alphas = alphas[layer.name]

    def fit(
        self,
        train: ArrayDataset,
        val: Optional[ArrayDataset] = None,
        out_dir: Optional[Union[str, Path]] = None,
    ) -> History:
        config = self.config
        val = val if val is not None else train
        history = History()
        best_acc, best = -1.0, None
        for epoch in range(config.epochs):
            lr = self.scheduler.step(epoch)
            rng = np.random.default_rng([config.seed, epoch])
            total_loss, correct, seen = 0.0, 0, 0
            for images, labels in train.batches(config.batch_size, rng):
                if len(labels) < 2:
                    continue
                loss, hits = self.train_step(images, labels)
                total_loss += loss * len(labels)
                correct += hits
                seen += len(labels)
            if seen == 0:
                raise ConfigError(f"no training batch of at least 2 samples (dataset has {len(train)})")
            val_acc = evaluate(self.model, val, self.weight_mode).top1
            row = HistoryRow(
                epoch=epoch + 1,
                lr=lr,
                train_loss=total_loss / seen,
                train_acc=correct / seen,
                val_acc=val_acc,
            )
            history.append(row)
            logger.info(
                f"epoch {row.epoch}/{config.epochs} lr={lr:.3g} loss={row.train_loss:.4f} "
                f"train_acc={row.train_acc:.4f} val_acc={row.val_acc:.4f}"
            )
            if val_acc > best_acc:
                best_acc, best = val_acc, self._snapshot()
                if out_dir is not None:
                    save_model(Path(out_dir) / CHECKPOINT_NAME, self.model, WeightMode.FP)
        if config.restore_best and best is not None:
            self._restore(best)
            logger.info(f"restored weights of the best epoch (val_acc={best_acc:.4f})")
        return history


def train_model(
    model: ModelGraph,
    config: TrainConfig,
    train: ArrayDataset,
    val: Optional[ArrayDataset] = None,
    out_dir: Optional[Union[str, Path]] = None,
) -> Tuple[ModelGraph, History]:
    try:
        history = Trainer(model, config).fit(train, val, out_dir)
    except TernError:
        get_tape().reset()
        raise
    return model, history
