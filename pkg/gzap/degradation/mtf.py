# gzap/degradation/mtf.py
"""
Sensor MTF degradation: Gaussian blur matched to a Nyquist gain, then decimation.

A Gaussian with standard deviation sigma has frequency response
exp(-2 pi^2 sigma^2 f^2); requiring it to equal `gain` at the Nyquist frequency
of the r-decimated grid (f = 1 / (2r)) gives sigma = (r / pi) sqrt(-2 ln gain).
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from ..autodiff import ops
from ..autodiff.tensor import Tensor
from ..infra.datamodels import ImagePair, MsImage, PanImage, SensorSpec
from ..infra.errors import ShapeError

DEFAULT_KERNEL_SIZE = 41

ImageLike = Union[MsImage, PanImage, np.ndarray]


@dataclass(frozen=True)
class MtfKernel:
    taps: np.ndarray      # [c, k, k], each band sums to 1
    taps_1d: np.ndarray   # [c, k] separable factors
    sigmas: Tuple[float, ...]
    ratio: int

    @property
    def bands(self) -> int:
        return int(self.taps.shape[0])

    @property
    def size(self) -> int:
        return int(self.taps.shape[1])


def gain_to_sigma(gain: float, r: int) -> float:
    if not 0.0 < gain < 1.0:
        raise ValueError(f"Nyquist gain must lie in (0, 1), got {gain}")
    return (r / np.pi) * float(np.sqrt(-2.0 * np.log(gain)))


def gaussian_taps(sigma: float, k: int) -> np.ndarray:
    t = np.arange(k, dtype=np.float64) - (k // 2)
    if sigma < 1e-12:
        h = (t == 0).astype(np.float64)
    else:
        h = np.exp(-0.5 * (t / sigma) ** 2)
    return h / h.sum()


def build_mtf_kernel(gains: Sequence[float], r: int, k: int = DEFAULT_KERNEL_SIZE) -> MtfKernel:
    if k % 2 == 0 or k < 1:
        raise ValueError(f"MTF kernel size must be odd and positive, got {k}")
    if r < 1:
        raise ValueError(f"ratio must be positive, got {r}")
    sigmas = tuple(gain_to_sigma(float(g), r) for g in gains)
    taps_1d = np.stack([gaussian_taps(s, k) for s in sigmas])
    taps = np.einsum("ci,cj->cij", taps_1d, taps_1d)
    taps /= taps.sum(axis=(1, 2), keepdims=True)
    return MtfKernel(taps=taps.astype(np.float32), taps_1d=taps_1d.astype(np.float32), sigmas=sigmas, ratio=r)


def ms_kernel(sensor: SensorSpec, k: int = DEFAULT_KERNEL_SIZE) -> MtfKernel:
    return build_mtf_kernel(sensor.nyquist_gains, sensor.ratio, k)


def pan_kernel(sensor: SensorSpec, k: int = DEFAULT_KERNEL_SIZE) -> MtfKernel:
    return build_mtf_kernel([sensor.pan_nyquist_gain], sensor.ratio, k)


def _as_hwc(img: ImageLike) -> Tuple[np.ndarray, str]:
    if isinstance(img, MsImage):
        return np.asarray(img.data), "ms"
    if isinstance(img, PanImage):
        return np.asarray(img.data)[:, :, None], "pan"
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim == 2:
        return arr[:, :, None], "array2d"
    if arr.ndim == 3:
        return arr, "array3d"
    raise ShapeError(f"expected a 2-D or 3-D image, got shape {arr.shape}")


def _wrap(arr: np.ndarray, kind: str):
    if kind == "ms":
        return MsImage(arr)
    if kind == "pan":
        return PanImage(arr[:, :, 0])
    if kind == "array2d":
        return arr[:, :, 0]
    return arr


def mtf_blur(img: ImageLike, kernel: MtfKernel):
    """Per-band separable Gaussian blur with half-sample mirror padding; output size = input size."""
    arr, kind = _as_hwc(img)
    if arr.shape[2] != kernel.bands:
        raise ShapeError(f"mtf_blur: image has {arr.shape[2]} bands, kernel has {kernel.bands}")
    out = np.empty(arr.shape, dtype=np.float32)
    for b in range(arr.shape[2]):
        band = arr[:, :, b].astype(np.float64)
        taps = kernel.taps_1d[b].astype(np.float64)
        band = ndimage.correlate1d(band, taps, axis=0, mode="reflect")
        band = ndimage.correlate1d(band, taps, axis=1, mode="reflect")
        out[:, :, b] = band
    if kind in ("ms", "pan"):
        out = np.clip(out, 0.0, 1.0)
    return _wrap(out, kind)


def decimate(img: ImageLike, r: int):
    """Keep every r-th sample starting at offset floor((r-1)/2)."""
    arr, kind = _as_hwc(img)
    H, W = arr.shape[:2]
    if r < 1 or H % r or W % r:
        raise ShapeError(f"decimate: {H}x{W} not divisible by {r}")
    off = ops.decimation_offset(r)
    return _wrap(np.ascontiguousarray(arr[off::r, off::r, :]), kind)


def blur_and_decimate(img: ImageLike, kernel: MtfKernel):
    return decimate(mtf_blur(img, kernel), kernel.ratio)


# ==========================================
# Differentiable path (level-0 loss)
# ==========================================

def mtf_blur_tensor(x: Tensor, kernel: MtfKernel) -> Tensor:
    """Same blur on an NCHW tensor, recorded on the tape."""
    if x.shape[1] != kernel.bands:
        raise ShapeError(f"mtf_blur_tensor: tensor has {x.shape[1]} channels, kernel has {kernel.bands}")
    half = kernel.size // 2
    padded = ops.pad_reflect(x, half, half)
    taps = kernel.taps_1d
    out = ops.depthwise_conv2d(padded, Tensor(taps[:, :, None]))
    return ops.depthwise_conv2d(out, Tensor(taps[:, None, :]))


def degrade_tensor(x: Tensor, kernel: MtfKernel) -> Tensor:
    return ops.decimate(mtf_blur_tensor(x, kernel), kernel.ratio)


# ==========================================
# Reduced-resolution inputs
# ==========================================

@dataclass(frozen=True)
class DegradedInputs:
    pan_1: PanImage
    lrms_1: MsImage
    pan_2: Optional[PanImage] = None
    lrms_2: Optional[MsImage] = None


def degrade_pair(pair: ImagePair, levels: int = 1, k: int = DEFAULT_KERNEL_SIZE) -> DegradedInputs:
    """Level 1 = MTF blur + decimate of PAN and LRMS; level 2 repeats it on the level-1 outputs."""
    if levels not in (1, 2):
        raise ValueError(f"levels must be 1 or 2, got {levels}")
    r = pair.ratio
    h, w = pair.lrms.height, pair.lrms.width
    need = r ** levels
    if h % r or w % r or (levels == 2 and (h % need or w % need)):
        raise ShapeError(f"degrade_pair: LRMS {h}x{w} not divisible by {need} for {levels} level(s)")
    k_ms, k_pan = ms_kernel(pair.sensor, k), pan_kernel(pair.sensor, k)
    pan_1 = blur_and_decimate(pair.pan, k_pan)
    lrms_1 = blur_and_decimate(pair.lrms, k_ms)
    if levels == 1:
        return DegradedInputs(pan_1=pan_1, lrms_1=lrms_1)
    return DegradedInputs(
        pan_1=pan_1,
        lrms_1=lrms_1,
        pan_2=blur_and_decimate(pan_1, k_pan),
        lrms_2=blur_and_decimate(lrms_1, k_ms),
    )
