"""
Error hierarchy. Every error carries a machine-readable category and the
exit code the CLI reports for it.
"""
from typing import Optional


class TernError(Exception):
    category = "internal"
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return self.detail


class ConfigError(TernError, ValueError):
    category = "config"
    exit_code = 2


class FoldError(ConfigError):
    pass


class DataIOError(TernError, OSError):
    category = "io"
    exit_code = 3


class ParseError(TernError, ValueError):
    category = "parse"
    exit_code = 4

    def __init__(self, detail: str, offset: Optional[int] = None):
        if offset is not None:
            detail = f"{detail} (at byte offset {offset})"
        super().__init__(detail)
        self.offset = offset


# ─── MODEL FILE ───────────────────────────────────────────────────

class ModelFileError(TernError, ValueError):
    category = "format"
    exit_code = 4


class BadMagicError(ModelFileError):
    pass


class VersionError(ModelFileError):
    pass


class ChecksumError(ModelFileError):
    pass


class TruncatedError(ModelFileError):
    pass


class CorruptionError(ModelFileError):
    pass


class PolicyMismatchError(ModelFileError):
    pass


# ─── NUMERICS ─────────────────────────────────────────────────────

class DimensionError(TernError, ValueError):
    category = "dimension"
    exit_code = 6


class ShapeMismatchError(DimensionError):
    def __init__(self, layer: str, expected, got):
        super().__init__(f"layer '{layer}': expected shape {tuple(expected)}, got {tuple(got)}")
        self.layer = layer


class NumericError(TernError, ArithmeticError):
    category = "numeric"
    exit_code = 7


class DivergenceError(TernError, ArithmeticError):
    category = "divergence"
    exit_code = 5

    def __init__(self, step: int, loss: float):
        super().__init__(f"loss became {loss} at step {step}")
        self.step = step


class TapeError(TernError, RuntimeError):
    category = "autodiff"
    exit_code = 8


class InvalidTargetError(TernError, ValueError):
    category = "input"
    exit_code = 9
