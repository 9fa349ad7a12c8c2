import os
from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Post-op finiteness checks and global kernel op counters
DEBUG_CHECKS = os.getenv("TERN_DEBUG", "0") == "1"

DATA_DIR = os.getenv("TERN_DATA_DIR", "data")

# ─── FPGA COST MODEL (Kintex-7 XC7K480T) ─────────────────────────
FPGA_ADDER_LUT = int(os.getenv("FPGA_ADDER_LUT", "261"))
FPGA_MULTIPLIER_LUT = int(os.getenv("FPGA_MULTIPLIER_LUT", "235"))
FPGA_MULTIPLIER_DSP = int(os.getenv("FPGA_MULTIPLIER_DSP", "2"))
FPGA_AVAILABLE_LUT = int(os.getenv("FPGA_AVAILABLE_LUT", "74650"))
FPGA_AVAILABLE_DSP = int(os.getenv("FPGA_AVAILABLE_DSP", "1920"))
