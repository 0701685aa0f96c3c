from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from ..degradation.mtf import DEFAULT_KERNEL_SIZE
from ..imagery.radiometry import denormalize
from ..infra.datamodels import ImagePair, MsImage
from ..infra.errors import ShapeError
from ..infra.log import logger
from ..infra.persistence import METRICS_CSV, METRICS_TABLE, PersistenceManager
from .no_reference import no_reference
from .quality import DEFAULT_WINDOW, q2n
from .reference import ergas, sam, scc

CSV_COLUMNS = ("d_lambda", "d_s", "hqnr", "q2n", "sam", "ergas", "scc")


@dataclass
class MetricsReport:
    d_lambda: float
    d_s: float
    hqnr: float
    q2n: Optional[float] = None
    sam_degrees: Optional[float] = None
    ergas: Optional[float] = None
    scc: Optional[float] = None

    @property
    def has_reference(self) -> bool:
        return self.q2n is not None

    def to_csv_row(self) -> List[Optional[float]]:
        return [self.d_lambda, self.d_s, self.hqnr, self.q2n, self.sam_degrees, self.ergas, self.scc]

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(
    fused: MsImage,
    pair: ImagePair,
    ground_truth: Optional[MsImage] = None,
    window: int = DEFAULT_WINDOW,
    k: int = DEFAULT_KERNEL_SIZE,
) -> MetricsReport:
    """No-reference metrics always; reference metrics when a ground truth is supplied."""
    dl, ds, hq = no_reference(fused, pair.pan, pair.lrms, pair.sensor, window, k)
    report = MetricsReport(d_lambda=dl, d_s=ds, hqnr=hq)
    if ground_truth is not None:
        if ground_truth.shape != fused.shape:
            raise ShapeError(f"ground truth {ground_truth.shape} does not match fused {fused.shape}")
        bit_depth = pair.sensor.bit_depth
        report.q2n = q2n(fused, ground_truth, window)
        report.sam_degrees = sam(fused, ground_truth)
        # scale-sensitive, so computed on digital numbers
        report.ergas = ergas(
            denormalize(fused.data, bit_depth), denormalize(ground_truth.data, bit_depth), pair.ratio
        )
        report.scc = scc(fused, ground_truth)
    logger.debug(f"[GZap-Metrics] {report.as_dict()}")
    return report


def _cell(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def format_table(rows: Sequence[Tuple[str, MetricsReport]]) -> str:
    header = ["method", *CSV_COLUMNS]
    body = [[name, *(_cell(v) for v in report.to_csv_row())] for name, report in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_metrics(
    store: PersistenceManager,
    rows: Sequence[Tuple[str, MetricsReport]],
    with_method: bool = False,
) -> List[Path]:
    """`metrics.csv` (leading `method` column only with baselines) and the `metrics.txt` table."""
    if not with_method and len(rows) != 1:
        raise ValueError("a metrics file without a method column holds exactly one row")
    if with_method:
        csv_path = store.write_csv(METRICS_CSV, ("method", *CSV_COLUMNS), ([n, *r.to_csv_row()] for n, r in rows))
    else:
        csv_path = store.write_csv(METRICS_CSV, CSV_COLUMNS, [rows[0][1].to_csv_row()])
    return [csv_path, store.write_text(METRICS_TABLE, format_table(rows))]
