"""Differentiable operators over `Tensor`; every op records itself on the tape."""
from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..infra.errors import ShapeError
from .tensor import Tensor, as_tensor


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out broadcast dimensions so the gradient matches the operand shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# ==========================================
# Elementwise
# ==========================================

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), _backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), _backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def _backward(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor.from_op(a.data * b.data, (a, b), _backward, "mul")


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = np.float32(factor)

    def _backward(g):
        return (g * factor,)

    return Tensor.from_op(a.data * factor, (a,), _backward, "scale")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0

    def _backward(g):
        return (g * mask,)

    return Tensor.from_op(np.where(mask, a.data, np.float32(0.0)), (a,), _backward, "relu")


# ==========================================
# Reductions and layout
# ==========================================

def sum(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    out = np.sum(a.data, axis=axis, keepdims=keepdims, dtype=np.float64)

    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).astype(np.float32),)

    return Tensor.from_op(out, (a,), _backward, "sum")


def mean(a) -> Tensor:
    a = as_tensor(a)
    n = a.size

    def _backward(g):
        return (np.full(a.shape, g.reshape(-1)[0] / n, dtype=np.float32),)

    return Tensor.from_op(np.mean(a.data, dtype=np.float64), (a,), _backward, "mean")


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    out = a.data.reshape(tuple(shape))

    def _backward(g):
        return (g.reshape(a.shape),)

    return Tensor.from_op(out, (a,), _backward, "reshape")


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def _backward(g):
        return (np.ascontiguousarray(g.transpose(inverse)),)

    return Tensor.from_op(np.ascontiguousarray(a.data.transpose(axes)), (a,), _backward, "transpose")


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    ref = tensors[0].shape
    axis = axis % len(ref)
    for t in tensors[1:]:
        if len(t.shape) != len(ref) or any(
            s != r for i, (s, r) in enumerate(zip(t.shape, ref)) if i != axis
        ):
            raise ShapeError(f"concat along axis {axis}: shape {t.shape} incompatible with {ref}")
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def _backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(tensors))
        )

    return Tensor.from_op(np.concatenate([t.data for t in tensors], axis=axis), tensors, _backward, "concat")


def index_select(a, axis: int, index: np.ndarray) -> Tensor:
    """Gather entries along one axis; repeated indices accumulate their gradients."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    axis = axis % a.ndim
    if index.size and (index.min() < 0 or index.max() >= a.shape[axis]):
        raise ShapeError(f"index_select: index out of range for axis {axis} of size {a.shape[axis]}")

    def _backward(g):
        moved = np.zeros((a.shape[axis],) + tuple(np.delete(a.shape, axis)), dtype=np.float32)
        np.add.at(moved, index, np.moveaxis(g, axis, 0))
        return (np.moveaxis(moved, 0, axis),)

    return Tensor.from_op(np.take(a.data, index, axis=axis), (a,), _backward, "index_select")


def gather_rows(a, index: np.ndarray) -> Tensor:
    return index_select(a, 0, index)


def symmetric_index(n: int, before: int, after: int) -> np.ndarray:
    """Half-sample symmetric reflection (d c b a | a b c d | d c b a), any pad width."""
    idx = np.arange(-before, n + after)
    period = 2 * n
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - 1 - idx, idx)


def pad_reflect(a, pad_h: int, pad_w: int) -> Tensor:
    """Mirror-pad the last two axes of an NCHW tensor."""
    a = as_tensor(a)
    H, W = a.shape[-2], a.shape[-1]
    out = index_select(a, -2, symmetric_index(H, pad_h, pad_h))
    return index_select(out, -1, symmetric_index(W, pad_w, pad_w))


def decimation_offset(r: int) -> int:
    return (r - 1) // 2


def decimate(a, r: int) -> Tensor:
    """Keep every r-th sample of the last two axes, starting at floor((r-1)/2)."""
    a = as_tensor(a)
    H, W = a.shape[-2], a.shape[-1]
    if H % r or W % r:
        raise ShapeError(f"decimate: {H}x{W} not divisible by {r}")
    if r == 1:
        return a
    off = decimation_offset(r)
    out = index_select(a, -2, np.arange(off, H, r))
    return index_select(out, -1, np.arange(off, W, r))


# ==========================================
# Linear algebra and convolutions
# ==========================================

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def _backward(g):
        ga = g @ b.data.T if a.requires_grad else None
        gb = a.data.T @ g if b.requires_grad else None
        return ga, gb

    return Tensor.from_op(a.data @ b.data, (a, b), _backward, "matmul")


def conv2d(x, kernel, bias=None, padding: int = 0) -> Tensor:
    """Cross-correlation of NCHW input with an [O, C, k, k] kernel and zero padding."""
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape} and {kernel.shape}")
    B, C, H, W = x.shape
    O, Ck, kh, kw = kernel.shape
    if Ck != C:
        raise ShapeError(f"conv2d: input has {C} channels, kernel expects {Ck}")
    if kh != kw or kh % 2 == 0:
        raise ShapeError(f"conv2d: kernel must be square with odd size, got {kh}x{kw}")
    if padding < 0:
        raise ShapeError(f"conv2d: padding must be >= 0, got {padding}")
    k, p = kh, padding
    Ho, Wo = H + 2 * p - k + 1, W + 2 * p - k + 1
    if Ho <= 0 or Wo <= 0:
        raise ShapeError(f"conv2d: kernel {k} too large for {H}x{W} input with padding {p}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))  # [B, C, Ho, Wo, k, k]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(B * Ho * Wo, C * k * k)
    wmat = kernel.data.reshape(O, C * k * k)
    out = (cols @ wmat.T).reshape(B, Ho, Wo, O).transpose(0, 3, 1, 2)
    parents = [x, kernel]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (O,):
            raise ShapeError(f"conv2d: bias shape {bias.shape} does not match {O} output channels")
        out = out + bias.data[None, :, None, None]
        parents.append(bias)

    def _backward(g):
        gm = g.transpose(0, 2, 3, 1).reshape(B * Ho * Wo, O)
        gk = (gm.T @ cols).reshape(kernel.shape) if kernel.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (gm @ wmat).reshape(B, Ho, Wo, C, k, k)
            gxp = np.zeros(xp.shape, dtype=np.float32)
            for i in range(k):
                for j in range(k):
                    gxp[:, :, i:i + Ho, j:j + Wo] += gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            gx = gxp[:, :, p:p + H, p:p + W] if p else gxp
        grads = [gx, gk]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return Tensor.from_op(out, parents, _backward, "conv2d")


def depthwise_conv2d(x, kernel) -> Tensor:
    """Per-channel cross-correlation, no padding: [B, C, H, W] with [C, kh, kw] taps."""
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 4 or kernel.ndim != 3 or kernel.shape[0] != x.shape[1]:
        raise ShapeError(f"depthwise_conv2d: input {x.shape} incompatible with kernel {kernel.shape}")
    B, C, H, W = x.shape
    _, kh, kw = kernel.shape
    Ho, Wo = H - kh + 1, W - kw + 1
    if Ho <= 0 or Wo <= 0:
        raise ShapeError(f"depthwise_conv2d: kernel {kh}x{kw} larger than input {H}x{W}")
    taps = kernel.data
    out = np.zeros((B, C, Ho, Wo), dtype=np.float32)
    for i in range(kh):
        for j in range(kw):
            out += taps[None, :, i, j, None, None] * x.data[:, :, i:i + Ho, j:j + Wo]

    def _backward(g):
        gx = np.zeros(x.shape, dtype=np.float32) if x.requires_grad else None
        gk = np.zeros(kernel.shape, dtype=np.float32) if kernel.requires_grad else None
        for i in range(kh):
            for j in range(kw):
                if gx is not None:
                    gx[:, :, i:i + Ho, j:j + Wo] += taps[None, :, i, j, None, None] * g
                if gk is not None:
                    gk[:, i, j] = np.sum(g * x.data[:, :, i:i + Ho, j:j + Wo], axis=(0, 2, 3))
        return gx, gk

    return Tensor.from_op(out, (x, kernel), _backward, "depthwise_conv2d")


# ==========================================
# Resampling
# ==========================================

def linear_weights(n_in: int, n_out: int) -> np.ndarray:
    """[n_out, n_in] half-pixel aligned linear interpolation matrix with edge clamping."""
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * n_in / n_out - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    t = src - i0
    m = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), 1.0 - t)
    np.add.at(m, (rows, i1), t)
    return m


def bilinear_resize(a, target_h: int, target_w: int) -> Tensor:
    a = as_tensor(a)
    if target_h <= 0 or target_w <= 0:
        raise ShapeError(f"bilinear_resize: target size must be positive, got {target_h}x{target_w}")
    H, W = a.shape[-2], a.shape[-1]
    my = linear_weights(H, target_h).astype(np.float32)
    mx = linear_weights(W, target_w).astype(np.float32)
    out = np.einsum("ij,...jk,lk->...il", my, a.data, mx)

    def _backward(g):
        return (np.einsum("ij,...il,lk->...jk", my, g, mx),)

    return Tensor.from_op(out, (a,), _backward, "bilinear_resize")


def avg_pool(a, factor: int) -> Tensor:
    a = as_tensor(a)
    H, W = a.shape[-2], a.shape[-1]
    if factor <= 0 or H % factor or W % factor:
        raise ShapeError(f"avg_pool: {H}x{W} not divisible by factor {factor}")
    lead = a.shape[:-2]
    out = a.data.reshape(*lead, H // factor, factor, W // factor, factor).mean(axis=(-3, -1))

    def _backward(g):
        g = np.repeat(np.repeat(g, factor, axis=-2), factor, axis=-1)
        return (g / np.float32(factor * factor),)

    return Tensor.from_op(out, (a,), _backward, "avg_pool")


# ==========================================
# Losses
# ==========================================

def l1_loss(pred, target) -> Tensor:
    """Mean absolute error; the target is treated as a constant and |x| has subgradient 0 at 0."""
    pred = as_tensor(pred)
    target = as_tensor(target).detach()
    if pred.shape != target.shape:
        raise ShapeError(f"l1_loss: prediction {pred.shape} vs target {target.shape}")
    diff = pred.data - target.data
    n = diff.size

    def _backward(g):
        return np.sign(diff) * np.float32(g.reshape(-1)[0] / n), None

    return Tensor.from_op(np.mean(np.abs(diff), dtype=np.float64), (pred, target), _backward, "l1_loss")
