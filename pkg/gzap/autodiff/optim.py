from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..infra.errors import ShapeError
from .tensor import Tensor


@dataclass
class AdamState:
    learning_rate: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: List[np.ndarray] = field(default_factory=list)
    second_moment: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[Tensor], learning_rate: float = 5e-4, **kwargs) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            first_moment=[np.zeros(p.shape, dtype=np.float32) for p in params],
            second_moment=[np.zeros(p.shape, dtype=np.float32) for p in params],
            **kwargs,
        )


def zero_grad(params: Sequence[Tensor]) -> None:
    for p in params:
        p.grad = None


def adam_step(
    params: Sequence[Tensor],
    grads: Sequence[Optional[np.ndarray]],
    state: AdamState,
    learning_rate: Optional[float] = None,
) -> None:
    """One bias-corrected Adam update in place; a missing gradient counts as zero."""
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ShapeError(
            f"adam_step: {len(params)} params, {len(grads)} grads, "
            f"{len(state.first_moment)}/{len(state.second_moment)} moment buffers"
        )
    lr = state.learning_rate if learning_rate is None else learning_rate
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.step
    bias2 = 1.0 - b2 ** state.step
    step_size = np.float32(lr * math.sqrt(bias2) / bias1)
    eps_hat = np.float32(state.epsilon * math.sqrt(bias2))
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if m.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"adam_step: moment buffers {m.shape}/{v.shape} do not match parameter {p.shape}")
        if g is None:
            g = np.zeros(p.shape, dtype=np.float32)
        elif g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient {g.shape} does not match parameter {p.shape}")
        m *= np.float32(b1)
        m += np.float32(1.0 - b1) * g
        v *= np.float32(b2)
        v += np.float32(1.0 - b2) * g * g
        p.data -= step_size * m / (np.sqrt(v) + eps_hat)
