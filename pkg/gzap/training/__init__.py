from importlib import import_module

__all__ = [
    "loss_level0",
    "loss_level1",
    "loss_level2",
    "total_loss",
    "EpochRecord",
    "TrainLog",
    "train",
    "infer_reuse",
]

_EXPORTS = {
    "loss_level0": ".losses",
    "loss_level1": ".losses",
    "loss_level2": ".losses",
    "total_loss": ".losses",
    "EpochRecord": ".trainer",
    "TrainLog": ".trainer",
    "train": ".trainer",
    "infer_reuse": ".trainer",
}


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name], __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
