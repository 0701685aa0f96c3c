# gzap/infra/datamodels.py
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from sqlmodel import Field, SQLModel

from .errors import SensorError, ShapeError

_RANGE_TOL = 1e-6


def _frozen(data: np.ndarray) -> np.ndarray:
    arr = np.array(data, dtype=np.float32, copy=True)
    arr.flags.writeable = False
    return arr


# ==========================================
# 1. Image data model (immutable runtime objects)
# ==========================================

@dataclass(frozen=True)
class MsImage:
    """Multispectral image, data laid out [h, w, c], values in [0, 1]."""
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] < 1:
            raise ShapeError(f"MsImage expects [h, w, c] data, got shape {arr.shape}")
        if arr.size and (arr.min() < -_RANGE_TOL or arr.max() > 1.0 + _RANGE_TOL):
            raise ValueError(f"MsImage values must lie in [0, 1], got [{arr.min():.4g}, {arr.max():.4g}]")
        object.__setattr__(self, "data", _frozen(arr))

    @classmethod
    def from_array(cls, data: np.ndarray, clip: bool = False) -> "MsImage":
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if clip:
            arr = np.clip(arr, 0.0, 1.0)
        return cls(arr)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def bands(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.height, self.width, self.bands

    def band(self, b: int) -> np.ndarray:
        return self.data[:, :, b]


@dataclass(frozen=True)
class PanImage:
    """Single-band panchromatic image, data laid out [H, W], values in [0, 1]."""
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim != 2:
            raise ShapeError(f"PanImage expects a single band [H, W], got shape {np.asarray(self.data).shape}")
        if arr.size and (arr.min() < -_RANGE_TOL or arr.max() > 1.0 + _RANGE_TOL):
            raise ValueError(f"PanImage values must lie in [0, 1], got [{arr.min():.4g}, {arr.max():.4g}]")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width


@dataclass(frozen=True)
class SensorSpec:
    """Sensor description: band count, PAN/MS ratio, MTF Nyquist gains, radiometric depth."""
    name: str
    bands: int
    ratio: int
    nyquist_gains: Tuple[float, ...]
    pan_nyquist_gain: float
    bit_depth: int

    def __post_init__(self):
        object.__setattr__(self, "nyquist_gains", tuple(float(g) for g in self.nyquist_gains))
        if self.bands < 1:
            raise SensorError(f"Sensor '{self.name}' needs at least one band")
        if self.ratio < 2:
            raise SensorError(f"Sensor '{self.name}' ratio must be >= 2, got {self.ratio}")
        if len(self.nyquist_gains) != self.bands:
            raise SensorError(
                f"Sensor '{self.name}' declares {self.bands} bands but {len(self.nyquist_gains)} Nyquist gains"
            )
        for g in (*self.nyquist_gains, self.pan_nyquist_gain):
            if not 0.0 < g < 1.0:
                raise SensorError(f"Sensor '{self.name}' Nyquist gain {g} outside (0, 1)")
        if self.bit_depth < 1:
            raise SensorError(f"Sensor '{self.name}' bit depth must be positive")

    def check_pair_shapes(self, pan_shape: Tuple[int, int], lrms_shape: Tuple[int, ...]) -> None:
        H, W = pan_shape
        h, w = lrms_shape[0], lrms_shape[1]
        if H != self.ratio * h or W != self.ratio * w:
            raise ShapeError(
                f"PAN {H}x{W} is not {self.ratio}x the LRMS {h}x{w} for sensor '{self.name}'"
            )
        if len(lrms_shape) > 2 and lrms_shape[2] != self.bands:
            raise SensorError(
                f"LRMS has {lrms_shape[2]} bands, sensor '{self.name}' expects {self.bands}"
            )


@dataclass(frozen=True)
class ImagePair:
    """A registered PAN/LRMS pair, the sole training input in the zero-shot setting."""
    pan: PanImage
    lrms: MsImage
    sensor: SensorSpec
    ground_truth: Optional[MsImage] = None

    def __post_init__(self):
        self.sensor.check_pair_shapes(self.pan.shape, self.lrms.shape)
        if self.ground_truth is not None:
            if self.ground_truth.shape != (self.pan.height, self.pan.width, self.lrms.bands):
                raise ShapeError(
                    f"Ground truth {self.ground_truth.shape} does not match PAN grid "
                    f"{self.pan.shape} with {self.lrms.bands} bands"
                )

    @property
    def ratio(self) -> int:
        return self.sensor.ratio

    @property
    def bands(self) -> int:
        return self.lrms.bands


# ==========================================
# 2. Run ledger tables (SQLModel)
# ==========================================

class TrainRecord(SQLModel, table=True):
    """One completed training run."""
    __table_args__ = {"extend_existing": True}
    id: Optional[int] = Field(default=None, primary_key=True)
    run_dir: str = Field(index=True)
    sensor: str = Field(default="")
    config_hash: str = Field(default="", index=True)
    seed: int = Field(default=0)
    epochs: int = Field(default=0)
    final_total: float = Field(default=0.0)
    final_l0: float = Field(default=0.0)
    final_l1: float = Field(default=0.0)
    final_l2: float = Field(default=0.0)
    weights_hash: str = Field(default="")
    seconds: float = Field(default=0.0)
    created_at: float = Field(default_factory=time.time)


class EvalRecord(SQLModel, table=True):
    """One evaluated fused product."""
    __table_args__ = {"extend_existing": True}
    id: Optional[int] = Field(default=None, primary_key=True)
    fused_path: str = Field(index=True)
    method: str = Field(default="fused")
    d_lambda: float = Field(default=0.0)
    d_s: float = Field(default=0.0)
    hqnr: float = Field(default=0.0)
    q2n: Optional[float] = Field(default=None)
    sam: Optional[float] = Field(default=None)
    ergas: Optional[float] = Field(default=None)
    scc: Optional[float] = Field(default=None)
    created_at: float = Field(default_factory=time.time)


@dataclass
class RunArtifacts:
    """Paths written by one CLI command."""
    out_dir: str = ""
    files: List[str] = field(default_factory=list)
