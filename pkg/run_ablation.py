"""Ablation grid on the synthetic task: FP baseline, then every ternary mode, median over seeds."""
import logging
import os
import statistics
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

sys.path.append(os.getcwd())

from src.core import config
from src.datasets.loader import DatasetSplits, load_dataset, split_validation
from src.helpers.csv_helpers import write_csv
from src.models.base import WeightMode
from src.models.builder import build_model
from src.schemas.dataset_schema import DatasetSource
from src.schemas.model_schema import ModelSpec
from src.schemas.train_schema import AblationMode, OptimizerKind, TrainConfig
from src.serialization.model_file import save_model
from src.training.trainer import evaluate, init_from_pretrained, train_model

logger = logging.getLogger("run_ablation")

SEEDS = (0, 1, 2)
EPOCHS = 15
OUT_DIR = Path(os.getenv("ABLATION_OUT", "out/ablation"))
TERNARY_MODES = (
    AblationMode.TW,
    AblationMode.TW_ICS,
    AblationMode.TW_FT,
    AblationMode.TW_ICS_FT,
    AblationMode.TW_ICS_FT_REL,
)
# modes expected to be non-decreasing in accuracy
ORDERED_MODES = (AblationMode.TW, AblationMode.TW_ICS, AblationMode.TW_ICS_FT, AblationMode.TW_ICS_FT_REL)

# 10 Gaussian classes on 1×8×8 images; every layer, first and last included, is ternarized
ABLATION_SOURCE = DatasetSource(
    kind="synthetic", seed=7, num_classes=10, image_shape=[1, 8, 8],
    train_size=2000, test_size=1000, separation=2.0,
)
SCRATCH_LR = 0.05
FINE_TUNE_LR = 0.01


def train_config(mode: AblationMode, seed: int, pretrained: Optional[Path] = None) -> TrainConfig:
    """SGD for every mode; fine-tuning starts from a 5× smaller rate on top of the FP weights."""
    fields = dict(
        mode=mode, seed=seed, epochs=EPOCHS, batch_size=64, optimizer=OptimizerKind.SGD,
        lr=FINE_TUNE_LR if mode.fine_tune else SCRATCH_LR, milestones=[10], factors=[0.1],
    )
    if mode.fine_tune:
        fields["pretrained"] = str(pretrained)
    if mode.rel:
        fields["t_ex"] = 2
    return TrainConfig(**fields)


def run_seed(seed: int, splits: DatasetSplits, spec: ModelSpec, out_dir: Path) -> Dict[str, float]:
    seed_dir = out_dir / f"seed{seed}"
    spec = spec.model_copy(update={"seed": seed})
    train, val = split_validation(splits.train, 0.1, seed)

    baseline, history = train_model(build_model(spec), train_config(AblationMode.FP, seed), train, val)
    pretrained = save_model(seed_dir / "model_fp.tern", baseline, WeightMode.FP)
    history.to_csv(seed_dir / "history_fp.csv")
    results = {"seed": seed, "fp": evaluate(baseline, splits.test, WeightMode.FP).top1}

    for mode in TERNARY_MODES:
        model = build_model(spec)
        if mode.fine_tune:
            init_from_pretrained(model, pretrained)
        model, history = train_model(model, train_config(mode, seed, pretrained), train, val)
        history.to_csv(seed_dir / f"history_{mode.value}.csv")
        results[mode.value] = evaluate(model, splits.test, WeightMode.TERNARY).top1
        logger.info(f"seed {seed} {mode.value}: {100 * results[mode.value]:.2f}%")
    return results


def run_grid(out_dir: Path = OUT_DIR, seeds: Sequence[int] = SEEDS) -> List[Dict[str, float]]:
    splits = load_dataset(ABLATION_SOURCE)
    spec = ModelSpec(arch="lenet", width=8).resolved(splits.image_shape, splits.num_classes)
    return [run_seed(seed, splits, spec, out_dir) for seed in seeds]


def median_row(rows: List[Dict[str, float]]) -> Dict[str, float]:
    columns = ["fp"] + [m.value for m in TERNARY_MODES]
    return {c: statistics.median(r[c] for r in rows) for c in columns}


def run_ablation():
    logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    rows = run_grid()
    medians = median_row(rows)
    columns = ["seed"] + list(medians)
    write_csv(OUT_DIR / "ablation.csv", rows + [{"seed": "median", **medians}], columns)
    for column, value in medians.items():
        print(f"{column:>14}: {100 * value:.2f}%")
    print(f"{'gap tw-ics-ft':>14}: {100 * (medians['fp'] - medians['tw-ics-ft']):.2f} points")
    print(f"{'gap with REL':>14}: {100 * (medians['fp'] - medians['tw-ics-ft-rel']):.2f} points")


if __name__ == "__main__":
    run_ablation()
