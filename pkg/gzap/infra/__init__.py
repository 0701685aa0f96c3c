from importlib import import_module

__all__ = ["logger", "configure_logging", "PersistenceManager", "RunLedger", "MsImage", "PanImage", "SensorSpec", "ImagePair"]


def __getattr__(name):
    if name in {"logger", "configure_logging"}:
        return getattr(import_module(".log", __name__), name)
    if name == "PersistenceManager":
        return import_module(".persistence", __name__).PersistenceManager
    if name == "RunLedger":
        return import_module(".database", __name__).RunLedger
    if name in {"MsImage", "PanImage", "SensorSpec", "ImagePair"}:
        return getattr(import_module(".datamodels", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
