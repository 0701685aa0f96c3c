# gzap/metrics/quality.py
"""
Universal image quality index Q and its hypercomplex extension Q2n.

Both are evaluated on non-overlapping blocks: the image is mirror-padded up to
a multiple of the block size and the per-block values are averaged. A block
whose denominator vanishes is skipped, except that two equal nonzero constant
blocks score 1.
"""
from typing import Tuple

import numpy as np

from ..infra.errors import ShapeError
from ..infra.log import logger

DEFAULT_WINDOW = 32
# variance below this fraction of the mean energy counts as a constant block
_RELATIVE_TOL = 1e-12


def effective_window(shape: Tuple[int, int], window: int) -> int:
    if window < 1:
        raise ShapeError(f"window must be positive, got {window}")
    return max(1, min(window, shape[0], shape[1]))


def to_blocks(arr: np.ndarray, window: int) -> np.ndarray:
    """[H, W, k] -> [by, bx, window*window, k] after symmetric padding to a multiple of window."""
    H, W = arr.shape[:2]
    pad_h, pad_w = (-H) % window, (-W) % window
    if pad_h or pad_w:
        arr = np.pad(arr, ((0, pad_h), (0, pad_w), (0, 0)), mode="symmetric")
    by, bx = arr.shape[0] // window, arr.shape[1] // window
    k = arr.shape[2]
    blocks = arr.reshape(by, window, bx, window, k).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(by, bx, window * window, k)


def _check_pair(x: np.ndarray, y: np.ndarray, op: str) -> None:
    if x.shape != y.shape:
        raise ShapeError(f"{op}: shapes {x.shape} and {y.shape} differ")


def average_blocks(values: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Mean over measured blocks; with none measurable, 1 for identical inputs and 0 otherwise."""
    valid = values[~np.isnan(values)]
    if valid.size == 0:
        logger.warning("[GZap-Metrics] every quality window is degenerate, falling back to an equality check")
        return 1.0 if np.array_equal(x, y) else 0.0
    return float(valid.mean())


# ==========================================
# Scalar Q
# ==========================================

def q_index_map(x: np.ndarray, y: np.ndarray, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Per-block Q for two single-band images; NaN marks skipped blocks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y, "q_index")
    if x.ndim != 2:
        raise ShapeError(f"q_index expects single-band [H, W] images, got {x.shape}")
    win = effective_window(x.shape, window)
    bx = to_blocks(x[:, :, None], win)[..., 0]
    by = to_blocks(y[:, :, None], win)[..., 0]
    mx, my = bx.mean(axis=-1), by.mean(axis=-1)
    vx = bx.var(axis=-1)
    vy = by.var(axis=-1)
    cov = ((bx - mx[..., None]) * (by - my[..., None])).mean(axis=-1)
    energy = mx ** 2 + my ** 2
    num = 4.0 * cov * mx * my
    den = (vx + vy) * energy
    tiny = _RELATIVE_TOL * energy ** 2
    measurable = (den > tiny) & (energy > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(measurable, num / np.where(measurable, den, 1.0), np.nan)
    constant_equal = ~measurable & (np.abs(bx - by).max(axis=-1) == 0) & (energy > 0)
    return np.where(constant_equal, 1.0, q)


def q_index(x: np.ndarray, y: np.ndarray, window: int = DEFAULT_WINDOW) -> float:
    return average_blocks(q_index_map(x, y, window), np.asarray(x), np.asarray(y))


# ==========================================
# Hypercomplex Q2n
# ==========================================

def conjugate(p: np.ndarray) -> np.ndarray:
    out = p.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def hypercomplex_mult(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product over the last axis (length a power of two): (a,b)(c,d) = (ac - d*b, da + bc*)."""
    n = p.shape[-1]
    if n == 1:
        return p * q
    half = n // 2
    a, b = p[..., :half], p[..., half:]
    c, d = q[..., :half], q[..., half:]
    return np.concatenate(
        [
            hypercomplex_mult(a, c) - hypercomplex_mult(conjugate(d), b),
            hypercomplex_mult(d, a) + hypercomplex_mult(b, conjugate(c)),
        ],
        axis=-1,
    )


def pad_to_power_of_two(arr: np.ndarray) -> np.ndarray:
    c = arr.shape[-1]
    target = 1 << int(np.ceil(np.log2(c))) if c > 1 else 1
    if target == c:
        return arr
    pad = [(0, 0)] * (arr.ndim - 1) + [(0, target - c)]
    return np.pad(arr, pad)


def q2n_map(x: np.ndarray, y: np.ndarray, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """
    Per-block |Q2n| with pixels as hypercomplex numbers:
    4 |sigma_xy| |mean_x| |mean_y| / ((sigma_x^2 + sigma_y^2)(|mean_x|^2 + |mean_y|^2)),
    sigma_xy = E[x y*] - mean_x mean_y*.

    Only the modulus of sigma_xy enters, so the score lies in [0, 1] and a
    single band gives |Q|: anticorrelated blocks score like correlated ones.
    """
    x = np.asarray(x.data if hasattr(x, "data") and not isinstance(x, np.ndarray) else x, dtype=np.float64)
    y = np.asarray(y.data if hasattr(y, "data") and not isinstance(y, np.ndarray) else y, dtype=np.float64)
    _check_pair(x, y, "q2n")
    if x.ndim != 3:
        raise ShapeError(f"q2n expects [H, W, c] images, got {x.shape}")
    win = effective_window(x.shape[:2], window)
    bx = to_blocks(pad_to_power_of_two(x), win)
    by = to_blocks(pad_to_power_of_two(y), win)
    mx, my = bx.mean(axis=2), by.mean(axis=2)
    mod_mx2 = (mx ** 2).sum(axis=-1)
    mod_my2 = (my ** 2).sum(axis=-1)
    vx = (bx ** 2).sum(axis=-1).mean(axis=-1) - mod_mx2
    vy = (by ** 2).sum(axis=-1).mean(axis=-1) - mod_my2
    cross = hypercomplex_mult(bx, conjugate(by)).mean(axis=2) - hypercomplex_mult(mx, conjugate(my))
    energy = mod_mx2 + mod_my2
    num = 4.0 * np.sqrt((cross ** 2).sum(axis=-1)) * np.sqrt(mod_mx2) * np.sqrt(mod_my2)
    den = (np.maximum(vx, 0.0) + np.maximum(vy, 0.0)) * energy
    tiny = _RELATIVE_TOL * energy ** 2
    measurable = (den > tiny) & (energy > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(measurable, num / np.where(measurable, den, 1.0), np.nan)
    constant_equal = ~measurable & (np.abs(bx - by).max(axis=(2, 3)) == 0) & (energy > 0)
    return np.clip(np.where(constant_equal, 1.0, q), 0.0, 1.0)


def q2n(x, y, window: int = DEFAULT_WINDOW) -> float:
    xa = np.asarray(x.data if hasattr(x, "data") and not isinstance(x, np.ndarray) else x)
    ya = np.asarray(y.data if hasattr(y, "data") and not isinstance(y, np.ndarray) else y)
    return average_blocks(q2n_map(xa, ya, window), xa, ya)
