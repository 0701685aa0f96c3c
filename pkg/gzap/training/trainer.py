# gzap/training/trainer.py
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from ..autodiff.optim import AdamState, adam_step, zero_grad
from ..autodiff.tensor import backward
from ..config import ModelConfig, TrainConfig
from ..degradation.mtf import DEFAULT_KERNEL_SIZE, DegradedInputs, degrade_pair, ms_kernel
from ..infra.datamodels import ImagePair, MsImage
from ..infra.errors import NumericalError, SensorError
from ..infra.log import logger
from ..infra.persistence import LOG_FILE, PersistenceManager, read_csv
from ..model.inrconv import INRConv, InrconvHyper, InrconvWeights
from .losses import loss_level0, loss_level1, loss_level2, total_loss

LOG_COLUMNS = ("epoch", "total", "l0", "l1", "l2", "seconds")


@dataclass
class EpochRecord:
    epoch: int
    total: float
    l0: float
    l1: float
    l2: float
    seconds: float


@dataclass
class TrainLog:
    """One record per completed epoch; disabled levels log 0."""
    records: List[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total for r in self.records], dtype=np.float64)

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def smoothed_total(self, window: int = 50) -> np.ndarray:
        """Trailing moving average; entry i averages epochs max(0, i-window+1)..i."""
        totals = self.totals
        if totals.size == 0:
            return totals
        csum = np.concatenate([[0.0], np.cumsum(totals)])
        idx = np.arange(1, totals.size + 1)
        start = np.maximum(0, idx - window)
        return (csum[idx] - csum[start]) / (idx - start)

    def to_csv(self, store: PersistenceManager, name: str = LOG_FILE) -> Path:
        rows = ([r.epoch, r.total, r.l0, r.l1, r.l2, r.seconds] for r in self.records)
        return store.write_csv(name, LOG_COLUMNS, rows)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TrainLog":
        log = cls()
        for row in read_csv(path):
            log.append(EpochRecord(
                epoch=int(row["epoch"]),
                total=float(row["total"]),
                l0=float(row["l0"]),
                l1=float(row["l1"]),
                l2=float(row["l2"]),
                seconds=float(row["seconds"]),
            ))
        return log


def learning_rate_at(cfg: TrainConfig, epoch: int) -> float:
    if cfg.schedule == "constant" or cfg.epochs <= 1:
        return cfg.learning_rate
    floor = cfg.learning_rate * cfg.min_lr_ratio
    progress = epoch / (cfg.epochs - 1)
    return floor + (cfg.learning_rate - floor) * 0.5 * (1.0 + math.cos(math.pi * progress))


def prepare_degraded(pair: ImagePair, cfg: TrainConfig, k: int = DEFAULT_KERNEL_SIZE) -> Optional[DegradedInputs]:
    """Build only the reduced-resolution inputs the enabled levels consume."""
    if cfg.enable_l2:
        return degrade_pair(pair, levels=2, k=k)
    if cfg.enable_l1:
        return degrade_pair(pair, levels=1, k=k)
    return None


def _value(term) -> float:
    return 0.0 if term is None else term.item()


def train(
    pair: ImagePair,
    cfg: TrainConfig,
    model_cfg: Optional[ModelConfig] = None,
    initial_weights: Optional[InrconvWeights] = None,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> Tuple[InrconvWeights, TrainLog]:
    """
    Zero-shot training on one pair: one full-image Adam step per epoch over the
    weighted sum of the enabled losses. Deterministic in (seed, pair, cfg).
    """
    hyper = InrconvHyper.from_config(model_cfg or ModelConfig(), pair.bands, pair.ratio)
    if initial_weights is not None and initial_weights.hyper != hyper:
        raise SensorError(f"initial weights were built for {initial_weights.hyper}, this run needs {hyper}")
    model = INRConv(hyper, weights=initial_weights, seed=cfg.seed)
    log = TrainLog()
    if cfg.epochs == 0:
        return model.state(), log

    weights = cfg.loss_weights(pair.bands)
    mtf = ms_kernel(pair.sensor, kernel_size)
    degraded = prepare_degraded(pair, cfg, kernel_size)
    params = model.parameters()
    state = AdamState.for_params(params, learning_rate=cfg.learning_rate)
    logger.info(
        f"[GZap-Train] {cfg.epochs} epochs on PAN {pair.pan.shape}, {pair.bands} bands, "
        f"weights (alpha, beta, gamma) = {weights}, levels "
        f"{[i for i, on in enumerate((cfg.enable_l0, cfg.enable_l1, cfg.enable_l2)) if on]}"
    )
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        zero_grad(params)
        try:
            l0 = loss_level0(model, pair, mtf) if cfg.enable_l0 else None
            l1 = loss_level1(model, pair, degraded) if cfg.enable_l1 else None
            l2 = loss_level2(model, pair, degraded) if cfg.enable_l2 else None
            total = total_loss(l0, l1, l2, weights)
            if not math.isfinite(total.item()):
                raise NumericalError("non-finite total loss", epoch=epoch)
            backward(total)
            adam_step(params, [p.grad for p in params], state, learning_rate=learning_rate_at(cfg, epoch))
        except NumericalError as e:
            if e.epoch is not None:
                raise
            raise NumericalError(str(e), epoch=epoch) from e
        if not all(np.isfinite(p.data).all() for p in params):
            raise NumericalError("non-finite weights after update", epoch=epoch)

        record = EpochRecord(epoch, total.item(), _value(l0), _value(l1), _value(l2), time.perf_counter() - started)
        log.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if (epoch + 1) % cfg.log_every == 0 or epoch == cfg.epochs - 1:
            logger.info(
                f"[GZap-Train] epoch {epoch + 1}/{cfg.epochs} total={record.total:.5f} "
                f"l0={record.l0:.5f} l1={record.l1:.5f} l2={record.l2:.5f} ({record.seconds:.1f}s)"
            )
        else:
            logger.debug(f"[GZap-Train] {asdict(record)}")
    return model.state(), log


def infer_reuse(weights: InrconvWeights, pair: ImagePair, N: float) -> MsImage:
    """Forward pass with frozen weights on a pair they were not trained on."""
    if weights.hyper.bands != pair.bands or weights.hyper.ratio != pair.ratio:
        raise SensorError(
            f"weights expect {weights.hyper.bands} bands at ratio {weights.hyper.ratio}, "
            f"pair has {pair.bands} bands at ratio {pair.ratio}"
        )
    return INRConv.from_weights(weights).predict(pair.pan, pair.lrms, N)
