# gzap/metrics/no_reference.py
"""
Full-resolution quality without a reference (HQNR protocol).

D_lambda compares the MTF-degraded fused image with the LRMS through Q2n.
D_s compares band-wise Q of (fused, PAN) against Q of (LRMS, degraded PAN).
"""
from typing import Tuple

import numpy as np

from ..degradation.mtf import DEFAULT_KERNEL_SIZE, blur_and_decimate, ms_kernel, pan_kernel
from ..infra.datamodels import MsImage, PanImage, SensorSpec
from ..infra.errors import ShapeError
from .quality import DEFAULT_WINDOW, q2n, q2n_map, q_index, q_index_map


def _check_full_resolution(fused: MsImage, pan: PanImage, lrms: MsImage) -> None:
    if fused.shape[:2] != pan.shape or fused.bands != lrms.bands:
        raise ShapeError(
            f"no-reference metrics need a fused image on the PAN grid {pan.shape} with {lrms.bands} bands, "
            f"got {fused.shape}"
        )


def d_lambda(fused: MsImage, lrms: MsImage, sensor: SensorSpec,
             window: int = DEFAULT_WINDOW, k: int = DEFAULT_KERNEL_SIZE) -> float:
    if fused.bands != lrms.bands:
        raise ShapeError(f"d_lambda: fused has {fused.bands} bands, LRMS has {lrms.bands}")
    degraded = blur_and_decimate(fused, ms_kernel(sensor, k))
    if degraded.shape != lrms.shape:
        raise ShapeError(f"d_lambda: degraded fused {degraded.shape} does not match LRMS {lrms.shape}")
    return float(np.clip(1.0 - q2n(degraded, lrms, window), 0.0, 1.0))


def d_s(fused: MsImage, pan: PanImage, lrms: MsImage, sensor: SensorSpec,
        window: int = DEFAULT_WINDOW, k: int = DEFAULT_KERNEL_SIZE) -> float:
    _check_full_resolution(fused, pan, lrms)
    pan_low = blur_and_decimate(pan, pan_kernel(sensor, k))
    low_window = max(1, window // sensor.ratio)
    q_high = np.mean([q_index(fused.band(b), pan.data, window) for b in range(fused.bands)])
    q_low = np.mean([q_index(lrms.band(b), pan_low.data, low_window) for b in range(lrms.bands)])
    return float(np.clip(abs(q_high - q_low), 0.0, 1.0))


def hqnr(d_lambda_value: float, d_s_value: float) -> float:
    return (1.0 - d_lambda_value) * (1.0 - d_s_value)


def no_reference(fused: MsImage, pan: PanImage, lrms: MsImage, sensor: SensorSpec,
                 window: int = DEFAULT_WINDOW, k: int = DEFAULT_KERNEL_SIZE) -> Tuple[float, float, float]:
    dl = d_lambda(fused, lrms, sensor, window, k)
    ds = d_s(fused, pan, lrms, sensor, window, k)
    return dl, ds, hqnr(dl, ds)


def hqnr_map(fused: MsImage, pan: PanImage, lrms: MsImage, sensor: SensorSpec,
             window: int = 8, k: int = DEFAULT_KERNEL_SIZE) -> np.ndarray:
    """
    HQNR per LRMS-grid block of `window` pixels (window * r on the PAN grid).
    Blocks without measurable structure count as ideal.
    """
    _check_full_resolution(fused, pan, lrms)
    r = sensor.ratio
    degraded = blur_and_decimate(fused, ms_kernel(sensor, k))
    pan_low = blur_and_decimate(pan, pan_kernel(sensor, k))
    window = max(1, min(window, lrms.height, lrms.width))
    dl = 1.0 - np.nan_to_num(q2n_map(degraded.data, lrms.data, window), nan=1.0)
    q_high = np.mean(
        [np.nan_to_num(q_index_map(fused.band(b), pan.data, window * r), nan=1.0) for b in range(fused.bands)],
        axis=0,
    )
    q_low = np.mean(
        [np.nan_to_num(q_index_map(lrms.band(b), pan_low.data, window), nan=1.0) for b in range(lrms.bands)],
        axis=0,
    )
    ds = np.clip(np.abs(q_high - q_low), 0.0, 1.0)
    return ((1.0 - np.clip(dl, 0.0, 1.0)) * (1.0 - ds)).astype(np.float32)
