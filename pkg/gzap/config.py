from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from .infra.errors import ConfigError
from .infra.persistence import read_kv_file


class SensorConfig(BaseModel):
    name: str = Field(default="synthetic", description="Sensor registry entry: wv3-like / gf2-like / synthetic")
    bands: Optional[int] = Field(default=None, description="Band count override (synthetic sensor only needs it)")
    nyquist_gains: Optional[List[float]] = Field(default=None, description="Per-band MTF gains at Nyquist; one value is broadcast to all bands")
    pan_nyquist_gain: Optional[float] = Field(default=None, description="PAN MTF gain at Nyquist")
    bit_depth: Optional[int] = Field(default=None, description="Radiometric depth used by normalize/denormalize")
    mtf_kernel_size: int = Field(default=41, description="Odd MTF kernel size, k >= 4r+1 recommended")


class ModelConfig(BaseModel):
    feature_dim: int = Field(default=64, description="Encoder feature channels D")
    n_resblocks: int = Field(default=4, description="EDSR residual blocks B")
    mlp_hidden: List[int] = Field(default=[256, 256, 256, 256], description="Hidden widths of the point-query MLP")
    query_dim: int = Field(default=64, description="MLP output width D'")


class TrainConfig(BaseModel):
    epochs: int = Field(default=500, ge=0)
    learning_rate: float = Field(default=5e-4, gt=0.0)
    alpha: Optional[float] = Field(default=None, ge=0.0, description="Level-0 weight; profile default when unset")
    beta: Optional[float] = Field(default=None, ge=0.0, description="Level-1 weight; profile default when unset")
    gamma: Optional[float] = Field(default=None, ge=0.0, description="Level-2 weight; profile default when unset")
    band_profile: Literal["auto", "8band", "4band", "custom"] = Field(default="auto", description="auto picks 8band for >=8 bands, else 4band")
    enable_l0: bool = Field(default=True)
    enable_l1: bool = Field(default=True)
    enable_l2: bool = Field(default=True)
    seed: int = Field(default=0)
    schedule: Literal["constant", "cosine"] = Field(default="constant", description="Learning-rate schedule")
    min_lr_ratio: float = Field(default=0.1, ge=0.0, le=1.0, description="Cosine floor as a fraction of the initial rate")
    log_every: int = Field(default=50, ge=1, description="Epochs between progress log lines")

    @model_validator(mode="after")
    def _check(self):
        if not (self.enable_l0 or self.enable_l1 or self.enable_l2):
            raise ValueError("at least one loss level must stay enabled")
        if self.band_profile == "custom" and None in (self.alpha, self.beta, self.gamma):
            raise ValueError("custom band profile needs alpha, beta and gamma")
        return self

    def loss_weights(self, bands: int) -> Tuple[float, float, float]:
        profile = self.band_profile
        if profile == "auto":
            profile = "8band" if bands >= 8 else "4band"
        defaults = {"8band": (1.0, 1.0, 0.2), "4band": (1.0, 1.0, 4.0)}.get(profile, (1.0, 1.0, 1.0))
        return (
            defaults[0] if self.alpha is None else self.alpha,
            defaults[1] if self.beta is None else self.beta,
            defaults[2] if self.gamma is None else self.gamma,
        )


class MetricsConfig(BaseModel):
    window: int = Field(default=32, ge=2, description="Q / Q2n block size")
    hqnr_map_window: int = Field(default=8, ge=2, description="LRMS-grid block size of the HQNR raster")
    hqnr_map: bool = Field(default=False, description="Also export the per-window HQNR raster")
    baselines: bool = Field(default=False, description="Also evaluate nearest/bicubic upsampled LRMS")


class SynthConfig(BaseModel):
    seed: int = Field(default=0)
    h: int = Field(default=16, ge=8, description="LRMS height")
    w: int = Field(default=16, ge=8, description="LRMS width")
    bands: Optional[int] = Field(default=None, ge=1, description="Band count; defaults to the sensor's (4 for synthetic)")


class RuntimeConfig(BaseModel):
    debug_mode: bool = Field(default=False)
    ledger: str = Field(default="", description="SQLite run ledger path; empty disables it")
    quicklook: bool = Field(default=False, description="Write PNG previews next to arrays")


class GZapConfig(BaseModel):
    sensor: SensorConfig = Field(default_factory=SensorConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)


# flag name -> (section, field, inverted)
FLAG_KEYS: Dict[str, Tuple[str, str, bool]] = {
    "sensor": ("sensor", "name", False),
    "nyquist-gains": ("sensor", "nyquist_gains", False),
    "pan-nyquist-gain": ("sensor", "pan_nyquist_gain", False),
    "bit-depth": ("sensor", "bit_depth", False),
    "mtf-kernel-size": ("sensor", "mtf_kernel_size", False),
    "feature-dim": ("model", "feature_dim", False),
    "resblocks": ("model", "n_resblocks", False),
    "mlp-hidden": ("model", "mlp_hidden", False),
    "query-dim": ("model", "query_dim", False),
    "epochs": ("train", "epochs", False),
    "lr": ("train", "learning_rate", False),
    "alpha": ("train", "alpha", False),
    "beta": ("train", "beta", False),
    "gamma": ("train", "gamma", False),
    "band-profile": ("train", "band_profile", False),
    "disable-l0": ("train", "enable_l0", True),
    "disable-l1": ("train", "enable_l1", True),
    "disable-l2": ("train", "enable_l2", True),
    "seed": ("train", "seed", False),
    "schedule": ("train", "schedule", False),
    "min-lr-ratio": ("train", "min_lr_ratio", False),
    "log-every": ("train", "log_every", False),
    "window": ("metrics", "window", False),
    "hqnr-map-window": ("metrics", "hqnr_map_window", False),
    "hqnr-map": ("metrics", "hqnr_map", False),
    "baselines": ("metrics", "baselines", False),
    "h": ("synth", "h", False),
    "w": ("synth", "w", False),
    "bands": ("synth", "bands", False),
    "debug": ("runtime", "debug_mode", False),
    "ledger": ("runtime", "ledger", False),
    "quicklook": ("runtime", "quicklook", False),
}

_LIST_FIELDS = {("sensor", "nyquist_gains"), ("model", "mlp_hidden")}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _normalize_key(key: str) -> str:
    return key.strip().lower().replace("_", "-")


def _resolve_key(key: str, seed_section: str = "train") -> Tuple[str, str, bool]:
    if "." in key:
        section, name = key.split(".", 1)
        section = section.strip().lower()
        name = name.strip().lower().replace("-", "_")
        if section not in GZapConfig.model_fields:
            raise ConfigError(f"Unknown config section '{section}' in key '{key}'")
        if name not in GZapConfig.model_fields[section].annotation.model_fields:
            raise ConfigError(f"Unknown config field '{name}' in section '{section}'")
        return section, name, False
    norm = _normalize_key(key)
    if norm not in FLAG_KEYS:
        raise ConfigError(f"Unknown config key '{key}'")
    if norm == "seed":
        return seed_section, "seed", False
    return FLAG_KEYS[norm]


def _coerce(section: str, name: str, value: Any, inverted: bool) -> Any:
    if isinstance(value, str):
        text = value.strip()
        if (section, name) in _LIST_FIELDS:
            return [v.strip() for v in text.split(",") if v.strip()]
        if inverted:
            lowered = text.lower()
            if lowered not in _TRUE | _FALSE:
                raise ConfigError(f"Expected a boolean for {name}, got {value!r}")
            return lowered in _FALSE
        return text
    if inverted:
        return not bool(value)
    return value


def apply_overrides(cfg: GZapConfig, overrides: Dict[str, Any], seed_section: str = "train") -> GZapConfig:
    """
    Return a new config with `flag-name -> value` (or `section.field -> value`) overrides applied.
    A bare `seed` lands in `seed_section`: the synth command seeds the scene, the others seed training.
    """
    data = cfg.model_dump()
    for key, value in overrides.items():
        if value is None:
            continue
        section, name, inverted = _resolve_key(key, seed_section)
        coerced = _coerce(section, name, value, inverted)
        if section == "sensor" and name == "nyquist_gains" and not isinstance(coerced, list):
            coerced = [coerced]
        data[section][name] = coerced
    try:
        return GZapConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    seed_section: str = "train",
) -> GZapConfig:
    """Defaults < config file < command-line overrides."""
    cfg = GZapConfig()
    if path:
        cfg = apply_overrides(cfg, read_kv_file(path), seed_section)
    if overrides:
        cfg = apply_overrides(cfg, overrides, seed_section)
    return cfg


def config_to_kv(cfg: GZapConfig) -> Dict[str, Any]:
    """Flatten to dotted `section.field` keys for `train.cfg` and hashing."""
    flat: Dict[str, Any] = {}
    for section, values in cfg.model_dump().items():
        for name, value in values.items():
            if value is None:
                continue
            flat[f"{section}.{name}"] = value
    return flat
