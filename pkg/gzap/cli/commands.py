# gzap/cli/commands.py
"""
Command-line surface: synth, train, infer, eval, ablate.

Every command resolves one `GZapConfig` (defaults < --config file < flags),
writes into its --out run directory and returns a process exit code.
"""
import argparse
import hashlib
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..config import FLAG_KEYS, GZapConfig, config_to_kv, load_config
from ..imagery.array_io import save_array
from ..imagery.io import export_quicklook, load_ms_image, load_pair, save_pair
from ..imagery.sensors import sensor_from_config
from ..imagery.synth import synth_pair
from ..infra.database import open_ledger
from ..infra.datamodels import EvalRecord, ImagePair, MsImage, RunArtifacts, TrainRecord
from ..infra.errors import GZapError
from ..infra.log import configure_logging, logger
from ..infra.persistence import (
    ABLATION_CSV,
    HQNR_MAP_FILE,
    TRAIN_CONFIG_FILE,
    PersistenceManager,
    format_kv_lines,
    fused_name,
)
from ..metrics.baselines import baseline_resample
from ..metrics.no_reference import hqnr_map, no_reference
from ..metrics.report import MetricsReport, evaluate, write_metrics
from ..model.inrconv import INRConv
from ..model.serialization import load_weights, save_weights, weights_hash
from ..training.trainer import infer_reuse, train

ABLATION_VARIANTS: Tuple[Tuple[str, Optional[str]], ...] = (
    ("full", None),
    ("no_l0", "enable_l0"),
    ("no_l1", "enable_l1"),
    ("no_l2", "enable_l2"),
)


# ==========================================
# Configuration plumbing
# ==========================================

def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Collect every config-backed flag that was actually given."""
    values: Dict[str, Any] = {}
    for flag in FLAG_KEYS:
        value = getattr(args, flag.replace("-", "_"), None)
        if value is not None:
            values[flag] = value
    return values


def resolve_config(args: argparse.Namespace) -> GZapConfig:
    cfg = load_config(getattr(args, "config", None), _overrides(args), getattr(args, "seed_section", "train"))
    configure_logging(cfg.runtime.debug_mode)
    return cfg


def config_hash(cfg: GZapConfig) -> str:
    return hashlib.sha256(format_kv_lines(config_to_kv(cfg)).encode("utf-8")).hexdigest()


def parse_scales(text: str) -> List[float]:
    try:
        scales = [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"scales must be comma-separated numbers, got {text!r}") from None
    if not scales or any(s <= 0 for s in scales):
        raise argparse.ArgumentTypeError(f"scales must be positive, got {text!r}")
    return scales


def _quicklook(store: PersistenceManager, name: str, image) -> None:
    try:
        export_quicklook(store.mark_written(name), image)
    except Exception as e:
        logger.warning(f"[GZap-CLI] quicklook {name} skipped: {e}")


def _record(ledger, method: str, record) -> None:
    if ledger is None:
        return
    try:
        getattr(ledger, method)(record)
    except Exception as e:
        logger.warning(f"[GZap-CLI] run ledger write failed: {e}")


# ==========================================
# Commands
# ==========================================

def cmd_synth(args: argparse.Namespace) -> RunArtifacts:
    cfg = resolve_config(args)
    sensor = sensor_from_config(cfg.sensor, bands=cfg.synth.bands)
    pair = synth_pair(cfg.synth.seed, cfg.synth.h, cfg.synth.w, sensor.bands, sensor, cfg.sensor.mtf_kernel_size)
    store = PersistenceManager(args.out)
    save_pair(store, pair)
    if cfg.runtime.quicklook:
        _quicklook(store, "pan.png", pair.pan)
        _quicklook(store, "lrms.png", pair.lrms)
    logger.info(f"[GZap-CLI] synthetic pair PAN {pair.pan.shape}, LRMS {pair.lrms.shape} -> {store.base_path}")
    return RunArtifacts(out_dir=str(store.base_path), files=store.written)


def _train_into(store: PersistenceManager, pair: ImagePair, cfg: GZapConfig, pair_dir: str,
                init_dir: Optional[str] = None, ledger=None):
    initial = load_weights(init_dir) if init_dir else None
    started = time.perf_counter()
    weights, log = train(pair, cfg.train, cfg.model, initial_weights=initial,
                         kernel_size=cfg.sensor.mtf_kernel_size)
    seconds = time.perf_counter() - started
    save_weights(store, weights)
    log.to_csv(store)
    store.write_kv(TRAIN_CONFIG_FILE, {"pair_dir": pair_dir, **config_to_kv(cfg)}, header="gzap effective config")
    digest = weights_hash(weights)
    final = log.final
    _record(ledger, "add_train", TrainRecord(
        run_dir=str(store.base_path),
        sensor=pair.sensor.name,
        config_hash=config_hash(cfg),
        seed=cfg.train.seed,
        epochs=cfg.train.epochs,
        final_total=final.total if final else 0.0,
        final_l0=final.l0 if final else 0.0,
        final_l1=final.l1 if final else 0.0,
        final_l2=final.l2 if final else 0.0,
        weights_hash=digest,
        seconds=seconds,
    ))
    logger.info(f"[GZap-CLI] trained {cfg.train.epochs} epochs in {seconds:.1f}s, weights {digest[:12]}")
    return weights, log, digest


def cmd_train(args: argparse.Namespace) -> RunArtifacts:
    cfg = resolve_config(args)
    pair = load_pair(args.pair_dir, with_ground_truth=False)
    store = PersistenceManager(args.out)
    ledger = open_ledger(cfg.runtime.ledger)
    try:
        weights, _, _ = _train_into(store, pair, cfg, str(args.pair_dir), args.init_weights, ledger)
    finally:
        if ledger is not None:
            ledger.close()
    if cfg.runtime.quicklook:
        _quicklook(store, "quicklook.png", INRConv.from_weights(weights).predict(pair.pan, pair.lrms, 1))
    return RunArtifacts(out_dir=str(store.base_path), files=store.written)


def cmd_infer(args: argparse.Namespace) -> RunArtifacts:
    cfg = resolve_config(args)
    weights = load_weights(args.weights)
    pair = load_pair(args.pair_dir, with_ground_truth=False)
    store = PersistenceManager(args.out)
    scales = args.scale if isinstance(args.scale, list) else parse_scales(args.scale)
    base: Optional[MsImage] = None
    for N in scales:
        started = time.perf_counter()
        fused = infer_reuse(weights, pair, N)
        save_array(store.mark_written(fused_name(N)), fused)
        logger.info(f"[GZap-CLI] x{N:g} -> {fused.shape} in {time.perf_counter() - started:.2f}s")
        if cfg.runtime.quicklook:
            _quicklook(store, fused_name(N, ".png"), fused)
        if cfg.metrics.baselines and N != 1:
            # the x1 product resampled to N, for comparison with the direct query
            if base is None:
                base = infer_reuse(weights, pair, 1)
            for method in ("nearest", "bicubic"):
                save_array(store.mark_written(fused_name(N, f"_{method}.arr")), baseline_resample(base, N, method))
    return RunArtifacts(out_dir=str(store.base_path), files=store.written)


def cmd_eval(args: argparse.Namespace) -> RunArtifacts:
    cfg = resolve_config(args)
    pair = load_pair(args.pair_dir, with_ground_truth=False)
    fused = load_ms_image(args.fused, pair.bands)
    gt = load_ms_image(args.gt, pair.bands) if args.gt else None
    window, k = cfg.metrics.window, cfg.sensor.mtf_kernel_size
    rows: List[Tuple[str, MetricsReport]] = [("fused", evaluate(fused, pair, gt, window, k))]
    if cfg.metrics.baselines:
        for method in ("nearest", "bicubic"):
            upsampled = baseline_resample(pair.lrms, pair.ratio, method)
            rows.append((method, evaluate(upsampled, pair, gt, window, k)))
    store = PersistenceManager(args.out)
    write_metrics(store, rows, with_method=cfg.metrics.baselines)
    if cfg.metrics.hqnr_map:
        raster = hqnr_map(fused, pair.pan, pair.lrms, pair.sensor, cfg.metrics.hqnr_map_window, k)
        save_array(store.mark_written(HQNR_MAP_FILE), raster)
    ledger = open_ledger(cfg.runtime.ledger)
    for method, report in rows:
        _record(ledger, "add_eval", EvalRecord(
            fused_path=str(args.fused),
            method=method,
            d_lambda=report.d_lambda,
            d_s=report.d_s,
            hqnr=report.hqnr,
            q2n=report.q2n,
            sam=report.sam_degrees,
            ergas=report.ergas,
            scc=report.scc,
        ))
    if ledger is not None:
        ledger.close()
    fused_report = rows[0][1]
    logger.info(
        f"[GZap-CLI] HQNR {fused_report.hqnr:.4f} (D_lambda {fused_report.d_lambda:.4f}, D_s {fused_report.d_s:.4f})"
    )
    return RunArtifacts(out_dir=str(store.base_path), files=store.written)


def cmd_ablate(args: argparse.Namespace) -> RunArtifacts:
    """Full objective plus each single-level removal, trained from the same seed."""
    cfg = resolve_config(args)
    pair = load_pair(args.pair_dir, with_ground_truth=False)
    store = PersistenceManager(args.out)
    ledger = open_ledger(cfg.runtime.ledger)
    rows = []
    try:
        for variant, disabled in ABLATION_VARIANTS:
            train_cfg = cfg.train if disabled is None else cfg.train.model_copy(update={disabled: False})
            if not (train_cfg.enable_l0 or train_cfg.enable_l1 or train_cfg.enable_l2):
                logger.warning(f"[GZap-CLI] ablation variant {variant} leaves no loss enabled, skipped")
                continue
            variant_cfg = cfg.model_copy(update={"train": train_cfg})
            logger.info(f"[GZap-CLI] ablation variant {variant}")
            weights, log, digest = _train_into(
                store.child(variant), pair, variant_cfg, str(args.pair_dir), ledger=ledger
            )
            fused = INRConv.from_weights(weights).predict(pair.pan, pair.lrms, 1)
            _, _, hq = no_reference(fused, pair.pan, pair.lrms, pair.sensor, cfg.metrics.window,
                                    cfg.sensor.mtf_kernel_size)
            final_total = log.final.total if log.final else float("nan")
            rows.append([variant, final_total, digest, hq])
    finally:
        if ledger is not None:
            ledger.close()
    store.write_csv(ABLATION_CSV, ("variant", "final_total", "weights_hash", "hqnr"), rows)
    return RunArtifacts(out_dir=str(store.base_path), files=store.written)


# ==========================================
# Parser
# ==========================================

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--out", required=True, help="output run directory")
    p.add_argument("--debug", action="store_const", const=True, default=None, help="debug logging")


def _add_sensor(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sensor", default=None, help="wv3-like | gf2-like | synthetic")
    p.add_argument("--nyquist-gains", default=None, help="comma-separated per-band MTF gains")
    p.add_argument("--pan-nyquist-gain", type=float, default=None)
    p.add_argument("--bit-depth", type=int, default=None)
    p.add_argument("--mtf-kernel-size", type=int, default=None)


def _add_train(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--band-profile", default=None, help="auto | 8band | 4band | custom")
    p.add_argument("--schedule", default=None, help="constant | cosine")
    p.add_argument("--min-lr-ratio", type=float, default=None)
    p.add_argument("--log-every", type=int, default=None)
    for level in (0, 1, 2):
        p.add_argument(f"--disable-l{level}", action="store_const", const=True, default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--resblocks", type=int, default=None)
    p.add_argument("--mlp-hidden", default=None, help="comma-separated hidden widths")
    p.add_argument("--query-dim", type=int, default=None)
    p.add_argument("--ledger", default=None, help="SQLite run ledger path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gzap", description="Zero-shot arbitrary-scale pansharpening")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic PAN/LRMS/GT pair")
    _add_common(p)
    _add_sensor(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--h", type=int, default=None, help="LRMS height")
    p.add_argument("--w", type=int, default=None, help="LRMS width")
    p.add_argument("--bands", type=int, default=None)
    p.add_argument("--quicklook", action="store_const", const=True, default=None)
    p.set_defaults(handler=cmd_synth, seed_section="synth")

    p = sub.add_parser("train", help="zero-shot training on one pair")
    _add_common(p)
    _add_train(p)
    p.add_argument("--pair-dir", required=True)
    p.add_argument("--init-weights", default=None, help="run directory holding weights to start from")
    p.add_argument("--mtf-kernel-size", type=int, default=None)
    p.add_argument("--quicklook", action="store_const", const=True, default=None)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("infer", help="query trained weights at one or more scales")
    _add_common(p)
    p.add_argument("--weights", required=True, help="run directory holding weights.bin + weights.manifest")
    p.add_argument("--pair-dir", required=True)
    p.add_argument("--scale", type=parse_scales, default=[1.0], help="comma-separated scales, e.g. 1,1.6,2")
    p.add_argument("--baselines", action="store_const", const=True, default=None)
    p.add_argument("--quicklook", action="store_const", const=True, default=None)
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("eval", help="quality metrics of a fused product")
    _add_common(p)
    p.add_argument("--fused", required=True)
    p.add_argument("--pair-dir", required=True)
    p.add_argument("--gt", default=None, help="reference array for Q2n / SAM / ERGAS / SCC")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--baselines", action="store_const", const=True, default=None)
    p.add_argument("--hqnr-map", action="store_const", const=True, default=None)
    p.add_argument("--hqnr-map-window", type=int, default=None)
    p.add_argument("--mtf-kernel-size", type=int, default=None)
    p.add_argument("--ledger", default=None)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("ablate", help="train the full objective and each single-loss removal")
    _add_common(p)
    _add_train(p)
    p.add_argument("--pair-dir", required=True)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--mtf-kernel-size", type=int, default=None)
    p.set_defaults(handler=cmd_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Exit 0 iff every output was written; 2 for input/shape errors, 3 for numerical aborts."""
    configure_logging(False)
    args = build_parser().parse_args(argv)
    try:
        artifacts = args.handler(args)
    except GZapError as e:
        logger.error(f"[GZap-CLI] {args.command} failed: {e}")
        return e.exit_code
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"[GZap-CLI] {args.command} failed: {e}")
        return 2
    logger.info(f"[GZap-CLI] {args.command}: {len(artifacts.files)} file(s) in {artifacts.out_dir}")
    return 0
