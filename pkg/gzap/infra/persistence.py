# gzap/infra/persistence.py
import csv
import hashlib
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from .errors import ConfigError
from .log import logger

PathLike = Union[str, Path]

# run directory layout
PAN_FILE = "pan.arr"
LRMS_FILE = "lrms.arr"
GT_FILE = "gt.arr"
SENSOR_FILE = "sensor.cfg"
WEIGHTS_FILE = "weights.bin"
MANIFEST_FILE = "weights.manifest"
LOG_FILE = "log.csv"
TRAIN_CONFIG_FILE = "train.cfg"
METRICS_CSV = "metrics.csv"
METRICS_TABLE = "metrics.txt"
HQNR_MAP_FILE = "hqnr_map.arr"
ABLATION_CSV = "ablation.csv"


def fused_name(scale: float, suffix: str = ".arr") -> str:
    return f"fused_x{scale:g}{suffix}"


def parse_kv_lines(text: str, source: str = "<config>") -> Dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment, blank lines are ignored."""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        values[key] = value.strip()
    return values


def format_kv_lines(values: Dict[str, Any], header: str = "") -> str:
    lines = [f"# {header}"] if header else []
    for key, value in values.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = f"{value:.10g}"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def read_kv_file(path: PathLike) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    return parse_kv_lines(path.read_text(encoding="utf-8"), source=str(path))


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class PersistenceManager:
    """
    Run directory manager (Infrastructure Layer)
    Owns one output directory: resolves artefact paths, writes CSV and key = value files.
    """

    def __init__(self, out_dir: PathLike):
        self.base_path = Path(out_dir)
        self.base_path.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def path(self, name: str) -> Path:
        return self.base_path / name

    def child(self, name: str) -> "PersistenceManager":
        return PersistenceManager(self.base_path / name)

    def mark_written(self, name: str) -> Path:
        target = self.path(name)
        self.written.append(str(target))
        return target

    def write_text(self, name: str, text: str) -> Path:
        target = self.mark_written(name)
        target.write_text(text, encoding="utf-8")
        logger.debug(f"[GZap-Infra] wrote {target}")
        return target

    def write_kv(self, name: str, values: Dict[str, Any], header: str = "") -> Path:
        return self.write_text(name, format_kv_lines(values, header=header))

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        target = self.mark_written(name)
        with open(target, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([_csv_cell(v) for v in row])
        logger.debug(f"[GZap-Infra] wrote {target}")
        return target


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
