# gzap/model/inrconv.py
"""
INRConv fusion network: EDSR-style encoder, coordinate-MLP point query with
four-neighbour area weighting, and a two-layer convolutional decoder.

Internally every image tensor is NCHW with batch 1. The query MLP consumes
[latent feature, q - z_t, cell] where the relative offset and the cell size
are expressed in feature-pixel units.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from ..autodiff import ops
from ..autodiff.tensor import Parameter, Tensor, is_grad_enabled, no_grad
from ..infra.datamodels import MsImage, PanImage
from ..infra.errors import SensorError, ShapeError
from ..infra.log import logger
from .coords import CoordGrid, axis_centers, make_coord_grid, neighbor_weights

KERNEL = 3
# queries per MLP pass when no tape is recorded
INFERENCE_CHUNK = 8192


@dataclass(frozen=True)
class InrconvHyper:
    bands: int
    ratio: int
    feature_dim: int = 64
    n_resblocks: int = 4
    mlp_hidden: Tuple[int, ...] = (256, 256, 256, 256)
    query_dim: int = 64

    def __post_init__(self):
        object.__setattr__(self, "mlp_hidden", tuple(int(w) for w in self.mlp_hidden))
        for name in ("bands", "ratio", "feature_dim", "query_dim"):
            if getattr(self, name) < 1:
                raise ShapeError(f"INRConv {name} must be positive, got {getattr(self, name)}")
        if self.n_resblocks < 0 or any(w < 1 for w in self.mlp_hidden):
            raise ShapeError(f"INRConv block count / MLP widths invalid: {self.n_resblocks}, {self.mlp_hidden}")

    @classmethod
    def from_config(cls, model_cfg, bands: int, ratio: int) -> "InrconvHyper":
        return cls(
            bands=bands,
            ratio=ratio,
            feature_dim=model_cfg.feature_dim,
            n_resblocks=model_cfg.n_resblocks,
            mlp_hidden=tuple(model_cfg.mlp_hidden),
            query_dim=model_cfg.query_dim,
        )

    @property
    def mlp_in(self) -> int:
        return self.feature_dim + 4

    def parameter_shapes(self) -> "OrderedDict[str, Tuple[int, ...]]":
        """Canonical parameter order and shapes; serialization and init both follow it."""
        c, D, Dq, k = self.bands, self.feature_dim, self.query_dim, KERNEL
        shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
        shapes["encoder.head.weight"] = (D, 2 * c, k, k)
        shapes["encoder.head.bias"] = (D,)
        for i in range(self.n_resblocks):
            for j in (1, 2):
                shapes[f"encoder.body.{i}.conv{j}.weight"] = (D, D, k, k)
                shapes[f"encoder.body.{i}.conv{j}.bias"] = (D,)
        shapes["encoder.tail.weight"] = (D, D, k, k)
        shapes["encoder.tail.bias"] = (D,)
        widths = [self.mlp_in, *self.mlp_hidden, Dq]
        for i in range(len(widths) - 1):
            shapes[f"mlp.{i}.weight"] = (widths[i], widths[i + 1])
            shapes[f"mlp.{i}.bias"] = (widths[i + 1],)
        shapes["decoder.conv1.weight"] = (Dq, Dq, k, k)
        shapes["decoder.conv1.bias"] = (Dq,)
        shapes["decoder.conv2.weight"] = (c, Dq, k, k)
        shapes["decoder.conv2.bias"] = (c,)
        return shapes


@dataclass
class InrconvWeights:
    """Detached parameter snapshot plus the hyperparameters that shaped it."""
    hyper: InrconvHyper
    arrays: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)

    def __post_init__(self):
        expected = self.hyper.parameter_shapes()
        if list(self.arrays) != list(expected):
            missing = sorted(set(expected) - set(self.arrays))
            extra = sorted(set(self.arrays) - set(expected))
            raise ShapeError(f"weights do not match hyperparameters (missing {missing}, unexpected {extra})")
        for name, shape in expected.items():
            if tuple(self.arrays[name].shape) != shape:
                raise ShapeError(f"parameter {name}: expected {shape}, got {tuple(self.arrays[name].shape)}")

    def copy(self) -> "InrconvWeights":
        return InrconvWeights(self.hyper, OrderedDict((k, v.copy()) for k, v in self.arrays.items()))


def init_weights(hyper: InrconvHyper, seed: int = 0) -> InrconvWeights:
    """Uniform fan-in init U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
    rng = np.random.default_rng(seed)
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    fan_in = 1
    for name, shape in hyper.parameter_shapes().items():
        if name.endswith(".weight"):
            fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        arrays[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
    return InrconvWeights(hyper, arrays)


def _as_arrays(pan, lrms) -> Tuple[np.ndarray, np.ndarray]:
    pan_arr = np.asarray(pan.data if isinstance(pan, PanImage) else pan, dtype=np.float32)
    lrms_arr = np.asarray(lrms.data if isinstance(lrms, MsImage) else lrms, dtype=np.float32)
    if pan_arr.ndim == 3 and pan_arr.shape[2] == 1:
        pan_arr = pan_arr[:, :, 0]
    if pan_arr.ndim != 2 or lrms_arr.ndim != 3:
        raise ShapeError(f"expected PAN [H, W] and LRMS [h, w, c], got {pan_arr.shape} and {lrms_arr.shape}")
    return pan_arr, lrms_arr


class INRConv:
    """
    Fusion network N_theta(P, Y, N).

    The model owns its parameters as tracked tensors; `state()` returns a
    detached snapshot and `INRConv(weights=...)` rebuilds from one.
    """

    def __init__(self, hyper: InrconvHyper, weights: Optional[InrconvWeights] = None, seed: int = 0):
        if weights is None:
            weights = init_weights(hyper, seed)
        elif weights.hyper != hyper:
            raise ShapeError(f"weights were built for {weights.hyper}, model expects {hyper}")
        self.hyper = hyper
        self._params: "OrderedDict[str, Tensor]" = OrderedDict(
            (name, Parameter(arr.copy(), name=name)) for name, arr in weights.arrays.items()
        )
        self._n_mlp = len(hyper.mlp_hidden) + 1

    @classmethod
    def from_weights(cls, weights: InrconvWeights) -> "INRConv":
        return cls(weights.hyper, weights)

    # ---- parameters ----
    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._params.items())

    def parameters(self) -> List[Tensor]:
        return list(self._params.values())

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def state(self) -> InrconvWeights:
        return InrconvWeights(self.hyper, OrderedDict((k, p.data.copy()) for k, p in self._params.items()))

    def load_state(self, weights: InrconvWeights) -> None:
        if weights.hyper != self.hyper:
            raise ShapeError(f"cannot load weights for {weights.hyper} into {self.hyper}")
        for name, arr in weights.arrays.items():
            self._params[name].data = np.ascontiguousarray(arr, dtype=np.float32).copy()

    def _conv(self, x: Tensor, prefix: str) -> Tensor:
        return ops.conv2d(x, self._params[f"{prefix}.weight"], self._params[f"{prefix}.bias"], padding=KERNEL // 2)

    # ---- encoder ----
    def encode(self, pan, lrms) -> Tensor:
        """Fused feature map [1, D, H, W] on the PAN grid."""
        pan_arr, lrms_arr = _as_arrays(pan, lrms)
        H, W = pan_arr.shape
        h, w, c = lrms_arr.shape
        r = self.hyper.ratio
        if c != self.hyper.bands:
            raise SensorError(f"model expects {self.hyper.bands} bands, LRMS has {c}")
        if H != r * h or W != r * w:
            raise ShapeError(f"ratio mismatch: PAN {H}x{W} is not {r}x the LRMS {h}x{w}")
        with no_grad():
            pan_dup = np.repeat(pan_arr[None, None], c, axis=1)
            lrms_up = ops.bilinear_resize(Tensor(lrms_arr.transpose(2, 0, 1)[None]), H, W).data
        x = Tensor(np.concatenate([pan_dup, lrms_up], axis=1))
        head = self._conv(x, "encoder.head")
        body = head
        for i in range(self.hyper.n_resblocks):
            inner = ops.relu(self._conv(body, f"encoder.body.{i}.conv1"))
            body = ops.add(self._conv(inner, f"encoder.body.{i}.conv2"), body)
        return ops.add(self._conv(body, "encoder.tail"), head)

    # ---- point query ----
    def _mlp(self, x: Tensor) -> Tensor:
        for i in range(self._n_mlp):
            x = ops.add(ops.matmul(x, self._params[f"mlp.{i}.weight"]), self._params[f"mlp.{i}.bias"])
            if i < self._n_mlp - 1:
                x = ops.relu(x)
        return x

    def _query_rows(self, flat: Tensor, Hf: int, Wf: int, coords: np.ndarray, cell: Tuple[float, float]) -> Tensor:
        Q = coords.shape[0]
        rows, cols, weights = neighbor_weights(coords[:, 0], coords[:, 1], Hf, Wf)
        rel_y = (coords[None, :, 0] - axis_centers(Hf)[rows]) * Hf
        rel_x = (coords[None, :, 1] - axis_centers(Wf)[cols]) * Wf
        rel = np.stack([rel_y, rel_x], axis=-1).reshape(4 * Q, 2)
        cell_feat = np.tile(np.array([cell[0] * Hf, cell[1] * Wf]), (4 * Q, 1))
        latent = ops.gather_rows(flat, (rows * Wf + cols).reshape(-1))
        inp = ops.concat([latent, Tensor(rel), Tensor(cell_feat)], axis=1)
        out = ops.reshape(self._mlp(inp), (4, Q, self.hyper.query_dim))
        return ops.sum(ops.mul(out, Tensor(weights[:, :, None])), axis=0)

    def query_points(self, feat: Tensor, coords: np.ndarray, cell: Tuple[float, float]) -> Tensor:
        """Area-weighted latent responses [Q, D'] for arbitrary (y, x) queries."""
        _, D, Hf, Wf = feat.shape
        coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
        flat = ops.reshape(ops.transpose(feat, (0, 2, 3, 1)), (Hf * Wf, D))
        if is_grad_enabled() or coords.shape[0] <= INFERENCE_CHUNK:
            return self._query_rows(flat, Hf, Wf, coords, cell)
        parts = [
            self._query_rows(flat, Hf, Wf, coords[s:s + INFERENCE_CHUNK], cell).data
            for s in range(0, coords.shape[0], INFERENCE_CHUNK)
        ]
        return Tensor(np.concatenate(parts, axis=0))

    def point_query(self, feat: Tensor, q: Tuple[float, float], cell: Tuple[float, float]) -> Tensor:
        return ops.reshape(self.query_points(feat, np.asarray([q]), cell), (self.hyper.query_dim,))

    def query_all(self, feat: Tensor, grid: CoordGrid) -> Tensor:
        """Dense queried feature map [1, D', oh, ow]."""
        oh, ow = grid.shape
        fq = self.query_points(feat, grid.coords(), grid.cell)
        fq = ops.reshape(fq, (oh, ow, self.hyper.query_dim))
        return ops.reshape(ops.transpose(fq, (2, 0, 1)), (1, self.hyper.query_dim, oh, ow))

    # ---- decoder ----
    def decode(self, fq: Tensor) -> Tensor:
        if fq.ndim != 4 or fq.shape[1] != self.hyper.query_dim:
            raise ShapeError(f"decode expects [1, {self.hyper.query_dim}, h, w], got {fq.shape}")
        return self._conv(ops.relu(self._conv(fq, "decoder.conv1")), "decoder.conv2")

    def forward(self, pan, lrms, N: float) -> Tensor:
        """Unclamped fused image [1, c, round(H*N), round(W*N)]."""
        feat = self.encode(pan, lrms)
        _, _, H, W = feat.shape
        return self.decode(self.query_all(feat, make_coord_grid(H, W, N)))

    __call__ = forward

    def predict(self, pan, lrms, N: float) -> MsImage:
        """Tape-free forward, clamped to [0, 1] for export."""
        with no_grad():
            out = self.forward(pan, lrms, N)
        logger.debug(f"[GZap-Model] predicted {out.shape[2]}x{out.shape[3]} at N={N:g}")
        return MsImage.from_array(out.data[0].transpose(1, 2, 0), clip=True)


def hwc_to_tensor(image: Union[MsImage, np.ndarray]) -> Tensor:
    arr = np.asarray(image.data if isinstance(image, MsImage) else image, dtype=np.float32)
    return Tensor(arr.transpose(2, 0, 1)[None])
