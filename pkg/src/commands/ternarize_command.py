import logging

from src.analysis.compression import compression_rate
from src.analysis.density import compare_density, density, first_last_names
from src.analysis.op_counts import op_counts
from src.analysis.report_writer import write_density_csv, write_reports
from src.core.errors import ConfigError
from src.datasets.loader import load_dataset, split_validation
from src.helpers.run_helpers import load_run_config, model_for, out_dir
from src.models.base import WeightMode
from src.schemas.run_schema import CliInvocation
from src.schemas.train_schema import RelInit
from src.serialization.model_file import save_model
from src.training.trainer import Trainer, evaluate, init_from_pretrained

logger = logging.getLogger(__name__)

NAME = "ternarize"
HELP = "ternary training / fine-tuning for one ablation mode; writes model_ternary.tern"
MODEL_FILE = "model_ternary.tern"


def run(invocation: CliInvocation) -> int:
    config = load_run_config(invocation, seed_required=True)
    train_config = config.train
    mode = train_config.mode
    if not mode.quantized:
        raise ConfigError("'ternarize' needs a ternary mode (tw, tw-ics, tw-ft, tw-ics-ft, tw-ics-ft-rel)")
    out = out_dir(invocation)
    splits = load_dataset(config.data)
    train, val = split_validation(splits.train, train_config.val_fraction, train_config.seed)
    spec, model = model_for(config)

    if mode.fine_tune:
        require_ternary = mode.rel and train_config.rel_init == RelInit.TERNARY
        init_from_pretrained(model, train_config.pretrained, require_ternary=require_ternary)
    elif train_config.pretrained:
        logger.warning(f"mode '{mode.value}' trains from scratch; ignoring pretrained checkpoint")

    trainer = Trainer(model, train_config)
    before = density(model)
    history = trainer.fit(train, val, out)
    after = density(model)

    save_model(out / MODEL_FILE, model, WeightMode.TERNARY)
    history.to_csv(out / "history.csv")
    write_density_csv(out / "density_before.csv", before)
    write_density_csv(out / "density_after.csv", after)
    changes = compare_density(before, after, first_last_names(model))
    for change in changes:
        logger.info(f"density of {change.name}: {change.before:.4f} -> {change.after:.4f}")
    cost = op_counts(model, (spec.in_channels, spec.image_size, spec.image_size))
    write_reports(out, model.name, after, cost, compression_rate(model), cost.fpga, changes)

    acc = evaluate(model, splits.test, WeightMode.TERNARY)
    print(
        f"{mode.value} model: top-1 {100 * acc.top1:.2f}%  top-{acc.k} {100 * acc.top5:.2f}%  "
        f"({acc.samples} samples, average density {after.average:.4f})"
    )
    return 0
