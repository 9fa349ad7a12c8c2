import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from src.helpers.csv_helpers import write_csv
from src.schemas.report_schema import CompressionReport, CostReport, DensityChange, DensityReport, FpgaCost

logger = logging.getLogger(__name__)

# ─── Templates ─────────────────────────────────────────────────────
BASE_DIR = os.path.dirname(os.path.dirname(__file__))  # src/
templates = Environment(
    loader=FileSystemLoader(os.path.join(BASE_DIR, "templates")),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)

DENSITY_COLUMNS = ["name", "kind", "branch", "nonzero", "total", "density"]
COST_COLUMNS = ["name", "kind", "macs", "output_elements", "density", "fp_muls", "fp_adds", "tern_add_sub", "tern_muls"]


def write_density_csv(path: Union[str, Path], report: DensityReport) -> Path:
    return write_csv(path, report.layers, DENSITY_COLUMNS)


def write_cost_csv(path: Union[str, Path], report: CostReport) -> Path:
    return write_csv(path, report.layers, COST_COLUMNS)


def write_compression_csv(path: Union[str, Path], report: CompressionReport) -> Path:
    return write_csv(path, [report])


def write_fpga_csv(path: Union[str, Path], cost: FpgaCost) -> Path:
    rows = [
        {"design": "floating-point", "macs": cost.fp_macs, "lut": cost.fp_lut, "dsp": cost.fp_dsp,
         "lut_util": cost.fp_lut_util, "dsp_util": cost.fp_dsp_util},
        {"design": "ternary", "macs": cost.tern_macs, "lut": cost.tern_lut, "dsp": cost.tern_dsp,
         "lut_util": cost.tern_lut_util, "dsp_util": cost.tern_dsp_util},
    ]
    return write_csv(path, rows)


def render_report(
    model_name: str,
    density: DensityReport,
    cost: CostReport,
    compression: CompressionReport,
    fpga: FpgaCost,
    changes: Optional[List[DensityChange]] = None,
) -> str:
    return templates.get_template("analysis_report.txt.j2").render(
        model_name=model_name,
        density=density,
        cost=cost,
        compression=compression,
        fpga=fpga,
        changes=changes or [],
    )


def write_reports(
    out_dir: Union[str, Path],
    model_name: str,
    density: DensityReport,
    cost: CostReport,
    compression: CompressionReport,
    fpga: FpgaCost,
    changes: Optional[List[DensityChange]] = None,
) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {
        "density": write_density_csv(out_dir / "density.csv", density),
        "cost": write_cost_csv(out_dir / "cost.csv", cost),
        "compression": write_compression_csv(out_dir / "compression.csv", compression),
        "fpga": write_fpga_csv(out_dir / "fpga.csv", fpga),
    }
    text = render_report(model_name, density, cost, compression, fpga, changes)
    paths["report"] = out_dir / "report.txt"
    paths["report"].write_text(text, encoding="utf-8")
    logger.info(f"wrote analysis reports to {out_dir}")
    return paths
