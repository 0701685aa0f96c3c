import numpy as np


def max_value(bit_depth: int) -> int:
    if bit_depth < 1:
        raise ValueError(f"bit depth must be positive, got {bit_depth}")
    return (1 << bit_depth) - 1


def normalize(raw, bit_depth: int) -> np.ndarray:
    """Integer digital numbers in [0, 2^bit_depth - 1] -> float32 in [0, 1]."""
    raw = np.asarray(raw)
    top = max_value(bit_depth)
    if raw.size and (raw.min() < 0 or raw.max() > top):
        raise ValueError(f"raw values outside [0, {top}] for bit depth {bit_depth}: [{raw.min()}, {raw.max()}]")
    return (raw.astype(np.float64) / top).astype(np.float32)


def denormalize(values, bit_depth: int) -> np.ndarray:
    """Float image -> integer digital numbers; clamps to [0, 1] before rescaling and rounding."""
    top = max_value(bit_depth)
    clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.rint(clipped * top).astype(np.int64)
