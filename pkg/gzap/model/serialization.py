"""
Weight files: `weights.bin` holds one array container per parameter in manifest
order; `weights.manifest` lists the hyperparameters then `param.<name> = d1xd2...`.
"""
import hashlib
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Union

import numpy as np

from ..imagery.array_io import encode_header, read_array, write_array
from ..infra.errors import ArrayFormatError, ShapeError
from ..infra.persistence import MANIFEST_FILE, WEIGHTS_FILE, PersistenceManager, parse_kv_lines
from .inrconv import InrconvHyper, InrconvWeights

PathLike = Union[str, Path]
_PARAM_PREFIX = "param."


def manifest_values(weights: InrconvWeights) -> Dict[str, object]:
    h = weights.hyper
    values: Dict[str, object] = {
        "bands": h.bands,
        "ratio": h.ratio,
        "feature_dim": h.feature_dim,
        "n_resblocks": h.n_resblocks,
        "mlp_hidden": list(h.mlp_hidden),
        "query_dim": h.query_dim,
    }
    for name, arr in weights.arrays.items():
        values[_PARAM_PREFIX + name] = "x".join(str(d) for d in arr.shape)
    return values


def hyper_from_manifest(values: Dict[str, str]) -> InrconvHyper:
    try:
        return InrconvHyper(
            bands=int(values["bands"]),
            ratio=int(values["ratio"]),
            feature_dim=int(values["feature_dim"]),
            n_resblocks=int(values["n_resblocks"]),
            mlp_hidden=tuple(int(v) for v in values["mlp_hidden"].split(",") if v.strip()),
            query_dim=int(values["query_dim"]),
        )
    except KeyError as e:
        raise ArrayFormatError(f"weights manifest is missing {e}") from None
    except ValueError as e:
        if isinstance(e, ShapeError):
            raise
        raise ArrayFormatError(f"weights manifest has a malformed value: {e}") from None


def save_weights(store: PersistenceManager, weights: InrconvWeights) -> None:
    with open(store.mark_written(WEIGHTS_FILE), "wb") as f:
        for arr in weights.arrays.values():
            write_array(f, arr)
    store.write_kv(MANIFEST_FILE, manifest_values(weights), header="gzap INRConv weights")


def load_weights(run_dir: PathLike) -> InrconvWeights:
    run_dir = Path(run_dir)
    manifest_path, bin_path = run_dir / MANIFEST_FILE, run_dir / WEIGHTS_FILE
    for path in (manifest_path, bin_path):
        if not path.exists():
            raise ArrayFormatError(f"weights file not found: {path}")
    values = parse_kv_lines(manifest_path.read_text(encoding="utf-8"), source=str(manifest_path))
    hyper = hyper_from_manifest(values)
    listed = OrderedDict(
        (k[len(_PARAM_PREFIX):], tuple(int(d) for d in v.split("x")))
        for k, v in values.items()
        if k.startswith(_PARAM_PREFIX)
    )
    expected = hyper.parameter_shapes()
    if listed != expected:
        raise ShapeError(f"{manifest_path}: parameter list does not match its hyperparameters")
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    with open(bin_path, "rb") as f:
        for name, shape in listed.items():
            arr = read_array(f, f"{bin_path}:{name}")
            if tuple(arr.shape) != shape:
                raise ShapeError(f"{bin_path}: parameter {name} stored as {arr.shape}, manifest says {shape}")
            arrays[name] = arr
        extra = len(f.read())
    if extra:
        raise ArrayFormatError(f"{bin_path}: {extra} unexpected bytes after the last parameter")
    return InrconvWeights(hyper, arrays)


def weights_hash(weights: InrconvWeights) -> str:
    """sha256 over the serialized payload (names, shapes, little-endian float32 data)."""
    digest = hashlib.sha256()
    for name, arr in weights.arrays.items():
        digest.update(name.encode("utf-8"))
        digest.update(encode_header(arr.shape))
        digest.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return digest.hexdigest()
