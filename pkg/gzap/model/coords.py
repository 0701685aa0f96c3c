from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..infra.errors import ShapeError

DOMAIN_TOL = 1e-6


def round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def output_size(H: int, W: int, N: float) -> Tuple[int, int]:
    if not N > 0:
        raise ShapeError(f"scale factor must be positive, got {N}")
    return max(1, round_half_up(H * N)), max(1, round_half_up(W * N))


def axis_centers(n: int) -> np.ndarray:
    """Pixel centres of an n-sample axis in [-1, 1]: -1 + (2i + 1) / n."""
    return -1.0 + (2.0 * np.arange(n, dtype=np.float64) + 1.0) / n


@dataclass(frozen=True)
class CoordGrid:
    ys: np.ndarray
    xs: np.ndarray
    cell: Tuple[float, float]

    @property
    def shape(self) -> Tuple[int, int]:
        return int(self.ys.size), int(self.xs.size)

    def coords(self) -> np.ndarray:
        """[height * width, 2] list of (y, x) pairs in row-major order."""
        yy, xx = np.meshgrid(self.ys, self.xs, indexing="ij")
        return np.stack([yy.reshape(-1), xx.reshape(-1)], axis=1)


def make_coord_grid(H: int, W: int, N: float) -> CoordGrid:
    """
    Target grid of an H x W image magnified by N. Sizes are round-half-up of H*N, W*N;
    centres and the cell size come from the realized sizes, which equal H*N, W*N whenever
    those are integers, so the grid stays symmetric and covers [-1, 1] for any N.
    """
    oh, ow = output_size(H, W, N)
    return CoordGrid(ys=axis_centers(oh), xs=axis_centers(ow), cell=(2.0 / oh, 2.0 / ow))


def axis_neighbors(q: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    For coordinates q on one axis of an n-point feature grid return the lower/upper
    neighbour indices and the fractional position t in [0, 1] between them. Queries
    beyond the outermost feature centres collapse onto the edge point.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.size and (q.min() < -1.0 - DOMAIN_TOL or q.max() > 1.0 + DOMAIN_TOL):
        raise ShapeError(f"query coordinate outside [-1, 1]: [{q.min()}, {q.max()}]")
    if n == 1:
        zeros = np.zeros(q.shape, dtype=np.int64)
        return zeros, zeros, np.zeros(q.shape)
    u = np.clip((np.clip(q, -1.0, 1.0) + 1.0) * n / 2.0 - 0.5, 0.0, n - 1.0)
    i0 = np.minimum(np.floor(u).astype(np.int64), n - 2)
    return i0, i0 + 1, u - i0


def neighbor_weights(qy: np.ndarray, qx: np.ndarray, Hf: int, Wf: int):
    """
    Four-neighbour indices (order 00, 01, 10, 11) and area weights. The weight of
    each neighbour is the area of the rectangle spanned by the query and the
    diagonally opposite neighbour, normalized by the total area.
    """
    iy0, iy1, ty = axis_neighbors(qy, Hf)
    ix0, ix1, tx = axis_neighbors(qx, Wf)
    rows = np.stack([iy0, iy0, iy1, iy1])
    cols = np.stack([ix0, ix1, ix0, ix1])
    weights = np.stack([(1 - ty) * (1 - tx), (1 - ty) * tx, ty * (1 - tx), ty * tx])
    return rows, cols, weights
