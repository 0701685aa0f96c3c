from __future__ import annotations

from enum import Enum
from typing import Optional


class FailureKind(str, Enum):
    NONE = "none"
    SHAPE_MISMATCH = "shape_mismatch"
    NON_FINITE = "non_finite"
    BAD_ARRAY_FILE = "bad_array_file"
    BAD_CONFIG = "bad_config"
    SENSOR_MISMATCH = "sensor_mismatch"
    UNKNOWN = "unknown"


# CLI exit codes per failure family
EXIT_CODES = {
    FailureKind.SHAPE_MISMATCH: 2,
    FailureKind.BAD_ARRAY_FILE: 2,
    FailureKind.BAD_CONFIG: 2,
    FailureKind.SENSOR_MISMATCH: 2,
    FailureKind.NON_FINITE: 3,
    FailureKind.UNKNOWN: 1,
}


class GZapError(Exception):
    kind: FailureKind = FailureKind.UNKNOWN

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.kind, 1)


class ShapeError(GZapError, ValueError):
    kind = FailureKind.SHAPE_MISMATCH


class NumericalError(GZapError, FloatingPointError):
    kind = FailureKind.NON_FINITE

    def __init__(self, message: str, epoch: Optional[int] = None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
        self.epoch = epoch


class ArrayFormatError(GZapError, ValueError):
    kind = FailureKind.BAD_ARRAY_FILE


class ConfigError(GZapError, ValueError):
    kind = FailureKind.BAD_CONFIG


class SensorError(GZapError, ValueError):
    kind = FailureKind.SENSOR_MISMATCH
