import logging

from src.core.errors import ConfigError
from src.datasets.loader import load_dataset, split_validation
from src.helpers.run_helpers import load_run_config, model_for, out_dir
from src.models.base import WeightMode
from src.schemas.run_schema import CliInvocation
from src.schemas.train_schema import AblationMode
from src.serialization.model_file import save_model
from src.training.trainer import evaluate, train_model

logger = logging.getLogger(__name__)

NAME = "train"
HELP = "full-precision pretraining; writes model_fp.tern and history.csv"
MODEL_FILE = "model_fp.tern"


def run(invocation: CliInvocation) -> int:
    config = load_run_config(invocation, seed_required=True)
    if config.train.mode != AblationMode.FP:
        raise ConfigError(f"'train' runs full-precision pretraining; use 'ternarize' for mode '{config.train.mode.value}'")
    out = out_dir(invocation)
    splits = load_dataset(config.data)
    train, val = split_validation(splits.train, config.train.val_fraction, config.train.seed)
    _, model = model_for(config)

    model, history = train_model(model, config.train, train, val, out)
    save_model(out / MODEL_FILE, model, WeightMode.FP)
    history.to_csv(out / "history.csv")

    acc = evaluate(model, splits.test, WeightMode.FP)
    print(f"fp model: top-1 {100 * acc.top1:.2f}%  top-{acc.k} {100 * acc.top5:.2f}%  ({acc.samples} samples)")
    return 0
