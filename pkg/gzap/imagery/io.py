from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..infra.datamodels import ImagePair, MsImage, PanImage
from ..infra.errors import ShapeError
from ..infra.log import logger
from ..infra.persistence import GT_FILE, LRMS_FILE, PAN_FILE, SENSOR_FILE, PersistenceManager, read_kv_file
from .array_io import load_array, save_array
from .sensors import sensor_from_kv, sensor_to_kv

PathLike = Union[str, Path]


def save_pair(store: PersistenceManager, pair: ImagePair) -> None:
    save_array(store.mark_written(PAN_FILE), pair.pan.data)
    save_array(store.mark_written(LRMS_FILE), pair.lrms.data)
    if pair.ground_truth is not None:
        save_array(store.mark_written(GT_FILE), pair.ground_truth.data)
    store.write_kv(SENSOR_FILE, sensor_to_kv(pair.sensor), header="gzap sensor spec")


def load_pair(pair_dir: PathLike, with_ground_truth: bool = True) -> ImagePair:
    """Load a pair directory; shapes are validated against the sensor before anything else runs."""
    pair_dir = Path(pair_dir)
    sensor = sensor_from_kv(read_kv_file(pair_dir / SENSOR_FILE))
    pan = load_array(pair_dir / PAN_FILE)
    lrms = load_array(pair_dir / LRMS_FILE)
    if lrms.ndim == 2:
        lrms = lrms[:, :, None]
    sensor.check_pair_shapes(pan.shape[:2], lrms.shape)
    gt = None
    gt_path = pair_dir / GT_FILE
    if with_ground_truth and gt_path.exists():
        gt = MsImage(load_array(gt_path))
    pair = ImagePair(pan=PanImage(pan), lrms=MsImage(lrms), sensor=sensor, ground_truth=gt)
    logger.debug(
        f"[GZap-Infra] loaded pair {pair_dir}: PAN {pair.pan.shape}, LRMS {pair.lrms.shape}, sensor {sensor.name}"
    )
    return pair


def load_ms_image(path: PathLike, bands: int) -> MsImage:
    data = load_array(path)
    if data.ndim == 2:
        data = data[:, :, None]
    if data.ndim != 3 or data.shape[2] != bands:
        raise ShapeError(f"{path}: expected an [h, w, {bands}] image, got {data.shape}")
    return MsImage.from_array(data, clip=True)


def export_quicklook(path: PathLike, image) -> Path:
    """8-bit PNG preview: the PAN band, or the first three bands of a multispectral image."""
    data = np.asarray(image.data if hasattr(image, "data") else image, dtype=np.float32)
    if data.ndim == 3:
        data = data[:, :, :3] if data.shape[2] >= 3 else data[:, :, 0]
    pixels = np.rint(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path)
    return path
