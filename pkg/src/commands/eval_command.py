from src.datasets.loader import load_dataset
from src.helpers.run_helpers import load_run_config, model_for, require_model_path
from src.schemas.run_schema import CliInvocation
from src.serialization.model_file import load_model_as_stored
from src.training.trainer import evaluate

NAME = "eval"
HELP = "top-1/top-5 accuracy of a saved model on the test split"


def run(invocation: CliInvocation) -> int:
    config = load_run_config(invocation)
    path = require_model_path(invocation)
    _, model = model_for(config)
    mode = load_model_as_stored(path, model)
    splits = load_dataset(config.data)
    acc = evaluate(model, splits.test, mode)
    print(f"{path.name} ({mode.value}): top-1 {100 * acc.top1:.2f}%  top-{acc.k} {100 * acc.top5:.2f}%  ({acc.samples} samples)")
    return 0
