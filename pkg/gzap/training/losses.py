# gzap/training/losses.py
"""
Three-level zero-shot objective.

level 0: full-resolution output, re-degraded through the sensor MTF, against the LRMS.
level 1: once-degraded inputs at N=1 against the LRMS.
level 2: twice-degraded inputs at N=1 against the once-degraded LRMS, plus at N=r
         against the LRMS.
"""
from typing import Optional, Tuple, Union

from ..autodiff import ops
from ..autodiff.tensor import Tensor
from ..degradation.mtf import DegradedInputs, MtfKernel, degrade_tensor
from ..infra.datamodels import ImagePair
from ..infra.errors import ShapeError
from ..model.coords import make_coord_grid
from ..model.inrconv import INRConv, hwc_to_tensor

LossValue = Union[Tensor, float, None]


def loss_level0(model: INRConv, pair: ImagePair, mtf: MtfKernel) -> Tensor:
    fused = model.forward(pair.pan, pair.lrms, 1)
    return ops.l1_loss(degrade_tensor(fused, mtf), hwc_to_tensor(pair.lrms))


def loss_level1(model: INRConv, pair: ImagePair, degraded: DegradedInputs) -> Tensor:
    out = model.forward(degraded.pan_1, degraded.lrms_1, 1)
    return ops.l1_loss(out, hwc_to_tensor(pair.lrms))


def loss_level2(model: INRConv, pair: ImagePair, degraded: DegradedInputs) -> Tensor:
    if degraded.pan_2 is None or degraded.lrms_2 is None:
        raise ShapeError("level-2 loss needs twice-degraded inputs (LRMS divisible by r^2)")
    # both terms query one encoding of the twice-degraded pair
    feat = model.encode(degraded.pan_2, degraded.lrms_2)
    _, _, H, W = feat.shape
    low = model.decode(model.query_all(feat, make_coord_grid(H, W, 1)))
    high = model.decode(model.query_all(feat, make_coord_grid(H, W, pair.ratio)))
    return ops.add(
        ops.l1_loss(low, hwc_to_tensor(degraded.lrms_1)),
        ops.l1_loss(high, hwc_to_tensor(pair.lrms)),
    )


def total_loss(l0: LossValue, l1: LossValue, l2: LossValue, weights: Tuple[float, float, float]):
    """alpha*l0 + beta*l1 + gamma*l2; a None term is disabled and contributes nothing."""
    total: Optional[Union[Tensor, float]] = None
    for term, w in zip((l0, l1, l2), weights):
        if term is None:
            continue
        scaled = ops.scale(term, w) if isinstance(term, Tensor) else float(term) * w
        if total is None:
            total = scaled
        elif isinstance(total, Tensor) or isinstance(scaled, Tensor):
            total = ops.add(total, scaled)
        else:
            total = total + scaled
    if total is None:
        raise ValueError("total_loss needs at least one enabled term")
    return total
