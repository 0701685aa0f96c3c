from typing import Literal

import numpy as np

from ..infra.datamodels import MsImage
from ..model.coords import output_size

Method = Literal["nearest", "bicubic"]
CATMULL_ROM_A = -0.5


def _source_positions(n_in: int, n_out: int) -> np.ndarray:
    # half-pixel aligned: output centre i maps to input coordinate (i + 0.5) * n_in / n_out - 0.5
    return (np.arange(n_out, dtype=np.float64) + 0.5) * n_in / n_out - 0.5


def nearest_weights(n_in: int, n_out: int) -> np.ndarray:
    src = np.floor(_source_positions(n_in, n_out) + 0.5).astype(np.int64)
    m = np.zeros((n_out, n_in))
    m[np.arange(n_out), np.clip(src, 0, n_in - 1)] = 1.0
    return m


def cubic_kernel(t: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    t = np.abs(t)
    near = (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1
    far = a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def bicubic_weights(n_in: int, n_out: int) -> np.ndarray:
    """[n_out, n_in] Catmull-Rom interpolation matrix; taps beyond the edge are clamped onto it."""
    src = _source_positions(n_in, n_out)
    base = np.floor(src).astype(np.int64)
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for offset in (-1, 0, 1, 2):
        idx = base + offset
        np.add.at(m, (rows, np.clip(idx, 0, n_in - 1)), cubic_kernel(src - idx))
    return m


def baseline_resample(img: MsImage, N: float, method: Method = "bicubic") -> MsImage:
    """Separable resampling to round(h*N) x round(w*N); the result is clamped to [0, 1]."""
    data = np.asarray(img.data if isinstance(img, MsImage) else img, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    h, w = data.shape[:2]
    oh, ow = output_size(h, w, N)
    if method == "nearest":
        my, mx = nearest_weights(h, oh), nearest_weights(w, ow)
    elif method == "bicubic":
        my, mx = bicubic_weights(h, oh), bicubic_weights(w, ow)
    else:
        raise ValueError(f"unknown resampling method '{method}'")
    out = np.einsum("ij,jkc,lk->ilc", my, data, mx)
    return MsImage.from_array(out, clip=True)
