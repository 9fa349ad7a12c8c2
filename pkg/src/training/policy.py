import logging
from typing import Dict

from src.models.graph import ModelGraph
from src.schemas.policy_schema import QuantPolicy
from src.schemas.train_schema import AblationMode, LayerSide, TrainConfig

logger = logging.getLogger(__name__)


def policy_for(config: TrainConfig) -> QuantPolicy:
    if config.mode == AblationMode.FP:
        return QuantPolicy.fp()
    if config.mode.rel:
        return QuantPolicy.rel(config.betas)
    return QuantPolicy.tern(config.betas[0])


def apply_policy(model: ModelGraph, config: TrainConfig) -> Dict[str, QuantPolicy]:
    """Give every conv/dense layer the mode's policy; first and last stay FP when asked."""
    policy = policy_for(config)
    layers = model.quantizable_layers()
    for i, layer in enumerate(layers):
        edge = i == 0 or i == len(layers) - 1
        if edge and config.first_last == LayerSide.FP:
            layer.set_policy(QuantPolicy.fp())
        else:
            layer.set_policy(policy)
    policies = model.policies()
    quantized = sum(p.quantized for p in policies.values())
    logger.info(f"{quantized}/{len(policies)} conv/dense layers quantized ({policy.kind.value})")
    return policies
