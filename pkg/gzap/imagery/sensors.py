# gzap/imagery/sensors.py
"""
Sensor registry.

All Nyquist gains default to 0.30: the sensors are known by name only, not by
their measured per-band MTF, so one documented value stands in and the config
overrides it.
"""
from typing import Any, Dict, Optional

from ..infra.datamodels import SensorSpec
from ..infra.errors import SensorError

DEFAULT_NYQUIST_GAIN = 0.30

# name -> (bands, ratio, bit_depth); None bands = configurable
_REGISTRY: Dict[str, Dict[str, Any]] = {
    "wv3-like": {"bands": 8, "ratio": 4, "bit_depth": 11},
    "gf2-like": {"bands": 4, "ratio": 4, "bit_depth": 10},
    "synthetic": {"bands": None, "ratio": 4, "bit_depth": 11},
}


def registered_sensors():
    return sorted(_REGISTRY)


def get_sensor(
    name: str,
    bands: Optional[int] = None,
    nyquist_gains=None,
    pan_nyquist_gain: Optional[float] = None,
    bit_depth: Optional[int] = None,
) -> SensorSpec:
    entry = _REGISTRY.get(name)
    if entry is None:
        raise SensorError(f"Unknown sensor '{name}', registered: {', '.join(registered_sensors())}")
    fixed_bands = entry["bands"]
    if fixed_bands is not None and bands is not None and bands != fixed_bands:
        raise SensorError(f"Sensor '{name}' has {fixed_bands} bands, {bands} requested")
    c = fixed_bands if fixed_bands is not None else (bands or 4)
    if nyquist_gains is None:
        gains = (DEFAULT_NYQUIST_GAIN,) * c
    else:
        gains = tuple(float(g) for g in nyquist_gains)
        if len(gains) == 1:
            gains = gains * c
    return SensorSpec(
        name=name,
        bands=c,
        ratio=entry["ratio"],
        nyquist_gains=gains,
        pan_nyquist_gain=DEFAULT_NYQUIST_GAIN if pan_nyquist_gain is None else float(pan_nyquist_gain),
        bit_depth=entry["bit_depth"] if bit_depth is None else int(bit_depth),
    )


def sensor_from_config(sensor_cfg, bands: Optional[int] = None) -> SensorSpec:
    """Resolve a `SensorConfig` section; `bands` is the fallback for the synthetic entry."""
    return get_sensor(
        sensor_cfg.name,
        bands=sensor_cfg.bands if sensor_cfg.bands is not None else bands,
        nyquist_gains=sensor_cfg.nyquist_gains,
        pan_nyquist_gain=sensor_cfg.pan_nyquist_gain,
        bit_depth=sensor_cfg.bit_depth,
    )


def sensor_to_kv(sensor: SensorSpec) -> Dict[str, Any]:
    return {
        "name": sensor.name,
        "bands": sensor.bands,
        "ratio": sensor.ratio,
        "nyquist_gains": list(sensor.nyquist_gains),
        "pan_nyquist_gain": sensor.pan_nyquist_gain,
        "bit_depth": sensor.bit_depth,
    }


def sensor_from_kv(values: Dict[str, str]) -> SensorSpec:
    try:
        return SensorSpec(
            name=values["name"],
            bands=int(values["bands"]),
            ratio=int(values["ratio"]),
            nyquist_gains=tuple(float(g) for g in values["nyquist_gains"].split(",")),
            pan_nyquist_gain=float(values["pan_nyquist_gain"]),
            bit_depth=int(values["bit_depth"]),
        )
    except KeyError as e:
        raise SensorError(f"sensor file is missing key {e}") from None
    except ValueError as e:
        if isinstance(e, SensorError):
            raise
        raise SensorError(f"sensor file has a malformed value: {e}") from None
