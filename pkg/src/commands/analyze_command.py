import logging

from src.analysis.compression import compression_rate
from src.analysis.density import density
from src.analysis.fpga_cost import fpga_cost
from src.analysis.op_counts import op_counts
from src.analysis.report_writer import write_fpga_csv, write_reports
from src.core.errors import ConfigError
from src.helpers.run_helpers import load_run_config, model_for, out_dir
from src.models.base import WeightMode
from src.schemas.run_schema import CliInvocation
from src.serialization.model_file import load_model_as_stored
from src.training.policy import apply_policy

logger = logging.getLogger(__name__)

NAME = "analyze"
HELP = "density, operation count, compression and FPGA cost reports"
FPGA_KEYS = ("fp_macs", "tern_macs")


def _print_fpga(cost) -> None:
    print(f"fpga floating-point: {cost.fp_macs} MACs  LUT {cost.fp_lut}  DSP {cost.fp_dsp}")
    print(f"fpga ternary:        {cost.tern_macs} MACs  LUT {cost.tern_lut}  DSP {cost.tern_dsp}")


def run(invocation: CliInvocation) -> int:
    out = out_dir(invocation)
    explicit_fpga = None
    if invocation.fpga:
        unknown = set(invocation.fpga) - set(FPGA_KEYS)
        if unknown or set(FPGA_KEYS) - set(invocation.fpga):
            raise ConfigError(f"--fpga takes exactly {' and '.join(k + '=N' for k in FPGA_KEYS)}")
        explicit_fpga = fpga_cost(invocation.fpga["fp_macs"], invocation.fpga["tern_macs"])

    if not invocation.model_path:
        if explicit_fpga is None:
            raise ConfigError("'analyze' needs --model <file>, --fpga fp_macs=N tern_macs=M, or both")
        write_fpga_csv(out / "fpga.csv", explicit_fpga)
        _print_fpga(explicit_fpga)
        return 0

    config = load_run_config(invocation)
    spec, model = model_for(config)
    mode = load_model_as_stored(invocation.model_path, model)
    if mode == WeightMode.FP and config.train.mode.quantized:
        apply_policy(model, config.train)
        logger.info(f"full-precision model analyzed under mode '{config.train.mode.value}'")

    density_report = density(model)
    cost = op_counts(model, (spec.in_channels, spec.image_size, spec.image_size))
    compression = compression_rate(model)
    fpga = explicit_fpga or cost.fpga
    write_reports(out, model.name, density_report, cost, compression, fpga)

    print(f"average density {density_report.average:.4f}")
    print(f"compression {compression.rate:.2f}x (whole file {compression.file_rate:.2f}x, theoretical {compression.theoretical_rate:.2f}x)")
    _print_fpga(fpga)
    return 0
