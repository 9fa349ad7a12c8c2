"""
LUT/DSP arithmetic for floating-point versus ternary accumulators.

A full-precision MAC needs an adder and a multiplier; a ternary MAC needs
only the adder. Unit costs and the device budget come from src.core.config.
"""
from src.core import config
from src.core.errors import ConfigError
from src.schemas.report_schema import FpgaCost


def fpga_cost(n_fp_macs: int, n_tern_macs: int) -> FpgaCost:
    if n_fp_macs < 0 or n_tern_macs < 0:
        raise ConfigError(f"MAC counts must be non-negative, got {n_fp_macs} and {n_tern_macs}")
    fp_lut = n_fp_macs * (config.FPGA_ADDER_LUT + config.FPGA_MULTIPLIER_LUT)
    fp_dsp = n_fp_macs * config.FPGA_MULTIPLIER_DSP
    tern_lut = n_tern_macs * config.FPGA_ADDER_LUT
    tern_dsp = 0
    return FpgaCost(
        fp_macs=n_fp_macs,
        tern_macs=n_tern_macs,
        fp_lut=fp_lut,
        fp_dsp=fp_dsp,
        tern_lut=tern_lut,
        tern_dsp=tern_dsp,
        available_lut=config.FPGA_AVAILABLE_LUT,
        available_dsp=config.FPGA_AVAILABLE_DSP,
        fp_lut_util=fp_lut / config.FPGA_AVAILABLE_LUT,
        fp_dsp_util=fp_dsp / config.FPGA_AVAILABLE_DSP,
        tern_lut_util=tern_lut / config.FPGA_AVAILABLE_LUT,
        tern_dsp_util=tern_dsp / config.FPGA_AVAILABLE_DSP,
    )
