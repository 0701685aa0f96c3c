from importlib import import_module

__all__ = [
    "load_array",
    "save_array",
    "normalize",
    "denormalize",
    "get_sensor",
    "synth_pair",
    "load_pair",
    "save_pair",
    "export_quicklook",
]

_EXPORTS = {
    "load_array": ".array_io",
    "save_array": ".array_io",
    "normalize": ".radiometry",
    "denormalize": ".radiometry",
    "get_sensor": ".sensors",
    "synth_pair": ".synth",
    "load_pair": ".io",
    "save_pair": ".io",
    "export_quicklook": ".io",
}


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name], __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
