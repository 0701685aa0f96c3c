from importlib import import_module

__all__ = [
    "CoordGrid",
    "make_coord_grid",
    "neighbor_weights",
    "INRConv",
    "InrconvHyper",
    "InrconvWeights",
    "init_weights",
    "save_weights",
    "load_weights",
    "weights_hash",
]

_EXPORTS = {
    "CoordGrid": ".coords",
    "make_coord_grid": ".coords",
    "neighbor_weights": ".coords",
    "INRConv": ".inrconv",
    "InrconvHyper": ".inrconv",
    "InrconvWeights": ".inrconv",
    "init_weights": ".inrconv",
    "save_weights": ".serialization",
    "load_weights": ".serialization",
    "weights_hash": ".serialization",
}


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name], __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
