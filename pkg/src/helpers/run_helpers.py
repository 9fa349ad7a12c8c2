import logging
from pathlib import Path
from typing import Tuple

from src.core.errors import ConfigError, DataIOError
from src.datasets.loader import dataset_geometry
from src.helpers.config_file_helpers import build_run_config
from src.models.builder import build_model
from src.models.graph import ModelGraph
from src.schemas.model_schema import ModelSpec
from src.schemas.run_schema import CliInvocation, RunConfig

logger = logging.getLogger(__name__)


def load_run_config(invocation: CliInvocation, seed_required: bool = False) -> RunConfig:
    overrides = dict(invocation.overrides)
    if invocation.seed is not None:
        overrides.setdefault("train.seed", str(invocation.seed))
        overrides.setdefault("model.seed", str(invocation.seed))
    config = build_run_config(invocation.config_path, overrides)
    if seed_required and "seed" not in config.train.model_fields_set:
        raise ConfigError(f"'{invocation.subcommand.value}' needs a seed: pass --seed or set train.seed")
    return config


def model_for(config: RunConfig) -> Tuple[ModelSpec, ModelGraph]:
    image_shape, num_classes = dataset_geometry(config.data)
    spec = config.model.resolved(image_shape, num_classes)
    return spec, build_model(spec)


def require_model_path(invocation: CliInvocation) -> Path:
    if not invocation.model_path:
        raise ConfigError(f"'{invocation.subcommand.value}' needs --model <file>")
    return Path(invocation.model_path)


def out_dir(invocation: CliInvocation) -> Path:
    path = Path(invocation.out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataIOError(f"cannot create output directory {path}: {exc.strerror or exc}")
    return path
