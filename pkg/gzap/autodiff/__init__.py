from . import ops
from .optim import AdamState, adam_step, zero_grad
from .tensor import Parameter, Tensor, as_tensor, backward, is_grad_enabled, no_grad

__all__ = [
    "ops",
    "Tensor",
    "Parameter",
    "as_tensor",
    "backward",
    "no_grad",
    "is_grad_enabled",
    "AdamState",
    "adam_step",
    "zero_grad",
]
