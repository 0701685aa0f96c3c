import numpy as np
from scipy import ndimage

from ..infra.errors import ShapeError
from ..infra.log import logger

LAPLACIAN = np.array([[-1.0, -1.0, -1.0], [-1.0, 8.0, -1.0], [-1.0, -1.0, -1.0]])


def _hwc(img) -> np.ndarray:
    arr = np.asarray(img.data if hasattr(img, "data") and not isinstance(img, np.ndarray) else img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ShapeError(f"expected an [h, w, c] image, got {arr.shape}")
    return arr


def _pair(x, y, op: str):
    xa, ya = _hwc(x), _hwc(y)
    if xa.shape != ya.shape:
        raise ShapeError(f"{op}: shapes {xa.shape} and {ya.shape} differ")
    return xa, ya


def sam(x, y) -> float:
    """Mean spectral angle in degrees; pixels where either vector is zero are skipped."""
    xa, ya = _pair(x, y, "sam")
    xv, yv = xa.reshape(-1, xa.shape[2]), ya.reshape(-1, ya.shape[2])
    norms = np.linalg.norm(xv, axis=1) * np.linalg.norm(yv, axis=1)
    valid = norms > 0
    if not valid.any():
        return 0.0
    cos = np.sum(xv[valid] * yv[valid], axis=1) / norms[valid]
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))).mean())


def ergas(x, y, r: float) -> float:
    """(100 / r) * sqrt(mean_b (RMSE_b / mean(y_b))^2); x is the fused image, y the reference."""
    xa, ya = _pair(x, y, "ergas")
    if r <= 0:
        raise ValueError(f"ergas ratio must be positive, got {r}")
    rmse = np.sqrt(np.mean((xa - ya) ** 2, axis=(0, 1)))
    means = ya.mean(axis=(0, 1))
    valid = means != 0
    if not valid.all():
        logger.warning(f"[GZap-Metrics] ergas: skipping {int((~valid).sum())} zero-mean reference band(s)")
    if not valid.any():
        return 0.0 if np.array_equal(xa, ya) else float("inf")
    return float(100.0 / r * np.sqrt(np.mean((rmse[valid] / means[valid]) ** 2)))


def high_pass(band: np.ndarray) -> np.ndarray:
    return ndimage.convolve(band, LAPLACIAN, mode="reflect")


def scc(x, y) -> float:
    """Per-band Pearson correlation of Laplacian high-pass images, averaged over bands."""
    xa, ya = _pair(x, y, "scc")
    values = []
    for b in range(xa.shape[2]):
        hx = high_pass(xa[:, :, b]).ravel()
        hy = high_pass(ya[:, :, b]).ravel()
        hx, hy = hx - hx.mean(), hy - hy.mean()
        den = np.sqrt(np.sum(hx ** 2) * np.sum(hy ** 2))
        if den == 0:
            values.append(1.0 if np.allclose(hx, hy) else 0.0)
        else:
            values.append(float(np.sum(hx * hy) / den))
    return float(np.mean(values))


def psnr(x, y, peak: float = 1.0) -> float:
    xa, ya = _pair(x, y, "psnr")
    mse = float(np.mean((xa - ya) ** 2))
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(peak ** 2 / mse))
