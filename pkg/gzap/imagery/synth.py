# gzap/imagery/synth.py
"""
Synthetic Wald-protocol scenes.

The ground-truth HRMS is a land-cover map: a palette of materials with
distinct reflectance spectra is laid out as a background ramp, filled convex
polygons and soft Gaussian patches, then modulated by a spectrally neutral
shading field. PAN is a convex combination of the GT bands with a broad
response; LRMS is the GT pushed through the sensor MTF and decimated, so the
GT is a valid reference for the fused product.
"""
import numpy as np
from scipy import ndimage

from ..degradation.mtf import DEFAULT_KERNEL_SIZE, blur_and_decimate, ms_kernel
from ..infra.datamodels import ImagePair, MsImage, PanImage, SensorSpec
from ..infra.errors import SensorError
from ..infra.log import logger

_MATERIALS = 6
_BLOBS = 12
_POLYGONS = 6
# Dirichlet concentration of the PAN spectral response; > 1 keeps every band in play
_PAN_CONCENTRATION = 4.0


def _signature(rng: np.random.Generator, c: int) -> np.ndarray:
    """Reflectance spectrum of one material; neighbouring bands move together."""
    raw = rng.uniform(0.25, 0.95, size=c)
    return 0.5 * (raw + ndimage.uniform_filter1d(raw, 3, mode="nearest"))


def _convex_polygon_mask(rng: np.random.Generator, yy: np.ndarray, xx: np.ndarray, H: int, W: int) -> np.ndarray:
    cy, cx = rng.uniform(0, H), rng.uniform(0, W)
    radius = rng.uniform(0.1, 0.35) * min(H, W)
    n = int(rng.integers(3, 7))
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=n))
    vy = cy + radius * np.sin(angles)
    vx = cx + radius * np.cos(angles)
    mask = np.ones((H, W), dtype=bool)
    for i in range(n):
        y0, x0 = vy[i], vx[i]
        y1, x1 = vy[(i + 1) % n], vx[(i + 1) % n]
        # vertices run counter-clockwise in (x, y); interior lies left of each edge
        cross = (x1 - x0) * (yy - y0) - (y1 - y0) * (xx - x0)
        mask &= cross >= 0
    return mask


def synth_ground_truth(rng: np.random.Generator, H: int, W: int, c: int) -> np.ndarray:
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    palette = np.stack([_signature(rng, c) for _ in range(_MATERIALS)])
    first, second = rng.choice(_MATERIALS, size=2, replace=False)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    ramp = np.cos(theta) * yy / H + np.sin(theta) * xx / W
    ramp = (ramp - ramp.min()) / max(ramp.max() - ramp.min(), 1e-12)
    gt = (1.0 - ramp)[:, :, None] * palette[first] + ramp[:, :, None] * palette[second]
    for _ in range(_POLYGONS):
        mask = _convex_polygon_mask(rng, yy, xx, H, W)
        gt[mask] = palette[rng.integers(_MATERIALS)]
    for _ in range(_BLOBS):
        cy, cx = rng.uniform(0, H), rng.uniform(0, W)
        sigma = rng.uniform(2.0, max(2.5, min(H, W) / 6.0))
        cover = rng.uniform(0.4, 1.0) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma ** 2))
        gt = (1.0 - cover)[:, :, None] * gt + cover[:, :, None] * palette[rng.integers(_MATERIALS)]
    # illumination scales every band alike
    fy, fx, phase = rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0), rng.uniform(0.0, 2.0 * np.pi)
    shade = 0.92 + 0.08 * np.cos(2.0 * np.pi * (fy * yy / H + fx * xx / W) + phase)
    return np.clip(gt * shade[:, :, None], 0.0, 1.0).astype(np.float32)


def synth_pair(seed: int, h: int, w: int, c: int, sensor: SensorSpec, k: int = DEFAULT_KERNEL_SIZE) -> ImagePair:
    """Deterministic in `seed`; returns a pair carrying its ground truth."""
    if h < 8 or w < 8:
        raise ValueError(f"synthetic LRMS must be at least 8x8, got {h}x{w}")
    if c < 1 or c != sensor.bands:
        raise SensorError(f"sensor '{sensor.name}' has {sensor.bands} bands, {c} requested")
    rng = np.random.default_rng(seed)
    r = sensor.ratio
    H, W = r * h, r * w
    gt = synth_ground_truth(rng, H, W, c)
    weights = rng.dirichlet(np.full(c, _PAN_CONCENTRATION))
    pan = np.clip(np.tensordot(gt.astype(np.float64), weights, axes=([2], [0])), 0.0, 1.0).astype(np.float32)
    gt_image = MsImage(gt)
    lrms = blur_and_decimate(gt_image, ms_kernel(sensor, k))
    logger.debug(f"[GZap-Synth] seed={seed} PAN {H}x{W}, LRMS {h}x{w}x{c}, sensor {sensor.name}")
    return ImagePair(pan=PanImage(pan), lrms=lrms, sensor=sensor, ground_truth=gt_image)
