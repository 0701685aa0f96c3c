from importlib import import_module

__all__ = [
    "q_index",
    "q2n",
    "sam",
    "ergas",
    "scc",
    "psnr",
    "d_lambda",
    "d_s",
    "hqnr",
    "hqnr_map",
    "baseline_resample",
    "MetricsReport",
    "evaluate",
    "write_metrics",
]

_EXPORTS = {
    "q_index": ".quality",
    "q2n": ".quality",
    "sam": ".reference",
    "ergas": ".reference",
    "scc": ".reference",
    "psnr": ".reference",
    "d_lambda": ".no_reference",
    "d_s": ".no_reference",
    "hqnr": ".no_reference",
    "hqnr_map": ".no_reference",
    "baseline_resample": ".baselines",
    "MetricsReport": ".report",
    "evaluate": ".report",
    "write_metrics": ".report",
}


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name], __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
