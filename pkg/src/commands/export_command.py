import logging

from src.core.errors import ConfigError
from src.helpers.run_helpers import load_run_config, model_for, out_dir, require_model_path
from src.models.base import WeightMode
from src.schemas.run_schema import CliInvocation
from src.serialization.model_file import load_model_as_stored, save_model
from src.training.policy import apply_policy

logger = logging.getLogger(__name__)

NAME = "export"
HELP = "write the packed ternary model file used for inference"
MODEL_FILE = "model_export.tern"


def run(invocation: CliInvocation) -> int:
    config = load_run_config(invocation)
    path = require_model_path(invocation)
    _, model = model_for(config)
    mode = load_model_as_stored(path, model)
    if mode == WeightMode.FP:
        if not config.train.mode.quantized:
            raise ConfigError("exporting a full-precision model needs a ternary mode (--mode) to quantize it")
        apply_policy(model, config.train)
    target = out_dir(invocation) / MODEL_FILE
    save_model(target, model, WeightMode.TERNARY)
    print(f"exported {model.name} to {target}")
    return 0
