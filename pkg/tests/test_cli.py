import argparse
import tempfile
import unittest
from pathlib import Path

import numpy as np

from gzap.cli.commands import build_parser, main, parse_scales
from gzap.imagery.array_io import load_array
from gzap.infra.database import RunLedger
from gzap.infra.persistence import read_csv, read_kv_file
from gzap.model.serialization import load_weights, weights_hash
from gzap.training.trainer import TrainLog

TINY_FLAGS = ["--feature-dim", "4", "--resblocks", "1", "--mlp-hidden", "8", "--query-dim", "4", "--log-every", "1"]


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def run_cli(self, *argv, expect: int = 0) -> None:
        code = main([str(a) for a in argv])
        self.assertEqual(code, expect, f"gzap {' '.join(map(str, argv))} exited {code}")

    def synth(self, name: str = "pair", *extra) -> Path:
        out = self.root / name
        self.run_cli("synth", "--out", out, "--seed", "0", "--bands", "2", *extra)
        return out

    def train(self, pair: Path, name: str = "run", *extra) -> Path:
        out = self.root / name
        self.run_cli("train", "--pair-dir", pair, "--out", out, "--epochs", "2", *TINY_FLAGS, *extra)
        return out


class ParserTest(unittest.TestCase):
    def test_scales(self):
        self.assertEqual(parse_scales("1,1.6, 2"), [1.0, 1.6, 2.0])
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_scales("0,2")
        args = build_parser().parse_args(["infer", "--weights", "w", "--pair-dir", "p", "--out", "o"])
        self.assertEqual(args.scale, [1.0])

    def test_out_is_required(self):
        with self.assertRaises(SystemExit):
            build_parser().parse_args(["synth"])


class SynthCommandTest(CliTestCase):
    def test_files_and_determinism(self):
        a = self.synth("a")
        b = self.synth("b")
        for name in ("pan.arr", "lrms.arr", "gt.arr", "sensor.cfg"):
            self.assertEqual((a / name).read_bytes(), (b / name).read_bytes(), name)
        self.assertEqual(load_array(a / "pan.arr").shape, (64, 64))
        self.assertEqual(load_array(a / "lrms.arr").shape, (16, 16, 2))
        self.assertEqual(read_kv_file(a / "sensor.cfg")["bands"], "2")

    def test_seed_from_config_file(self):
        cfg = self.root / "synth.cfg"
        cfg.write_text("seed = 7\nbands = 2\n")
        from_file = self.root / "from_file"
        self.run_cli("synth", "--out", from_file, "--config", cfg)
        from_flag = self.root / "from_flag"
        self.run_cli("synth", "--out", from_flag, "--seed", "7", "--bands", "2")
        default = self.synth("default")
        self.assertEqual((from_file / "pan.arr").read_bytes(), (from_flag / "pan.arr").read_bytes())
        self.assertNotEqual((from_file / "pan.arr").read_bytes(), (default / "pan.arr").read_bytes())

    def test_named_sensor_and_quicklook(self):
        out = self.root / "wv3"
        self.run_cli("synth", "--out", out, "--sensor", "wv3-like", "--h", "8", "--w", "8", "--quicklook")
        self.assertEqual(load_array(out / "lrms.arr").shape, (8, 8, 8))
        self.assertTrue((out / "pan.png").exists())

    def test_invalid_request_exits_2(self):
        self.run_cli("synth", "--out", self.root / "bad", "--sensor", "wv3-like", "--bands", "4", expect=2)
        self.run_cli("synth", "--out", self.root / "bad3", "--h", "4", expect=2)


class TrainInferEvalTest(CliTestCase):
    def test_train_writes_run_directory(self):
        pair = self.synth()
        run = self.train(pair, "run", "--ledger", self.root / "runs.db")
        for name in ("weights.bin", "weights.manifest", "log.csv", "train.cfg"):
            self.assertTrue((run / name).exists(), name)
        log = TrainLog.from_csv(run / "log.csv")
        self.assertEqual([r.epoch for r in log.records], [0, 1])
        cfg = read_kv_file(run / "train.cfg")
        self.assertEqual(cfg["train.epochs"], "2")
        self.assertEqual(cfg["pair_dir"], str(pair))
        ledger = RunLedger(self.root / "runs.db")
        try:
            runs = ledger.train_runs()
            self.assertEqual(len(runs), 1)
            self.assertEqual(runs[0].weights_hash, weights_hash(load_weights(run)))
        finally:
            ledger.close()

    def test_zero_epochs_from_initial_weights_keeps_them(self):
        pair = self.synth()
        first = self.train(pair, "first")
        again = self.root / "again"
        self.run_cli("train", "--pair-dir", pair, "--out", again, "--epochs", "0", "--init-weights", first, *TINY_FLAGS)
        self.assertEqual((first / "weights.bin").read_bytes(), (again / "weights.bin").read_bytes())

    def test_infer_at_several_scales(self):
        pair = self.synth()
        run = self.train(pair)
        out = self.root / "fused"
        self.run_cli("infer", "--weights", run, "--pair-dir", pair, "--out", out, "--scale", "1,1.6,2,3.4,4")
        expected = {"1": 64, "1.6": 102, "2": 128, "3.4": 218, "4": 256}
        for scale, side in expected.items():
            arr = load_array(out / f"fused_x{scale}.arr")
            self.assertEqual(arr.shape, (side, side, 2), scale)
            self.assertGreaterEqual(arr.min(), 0.0)
            self.assertLessEqual(arr.max(), 1.0)

    def test_infer_baselines(self):
        pair = self.synth()
        run = self.train(pair)
        out = self.root / "fused"
        self.run_cli("infer", "--weights", run, "--pair-dir", pair, "--out", out, "--scale", "1,2", "--baselines")
        self.assertEqual(load_array(out / "fused_x2_bicubic.arr").shape, (128, 128, 2))
        self.assertTrue((out / "fused_x2_nearest.arr").exists())
        self.assertFalse((out / "fused_x1_bicubic.arr").exists())

    def test_eval_ground_truth_against_itself(self):
        pair = self.synth()
        out = self.root / "eval"
        self.run_cli("eval", "--fused", pair / "gt.arr", "--gt", pair / "gt.arr", "--pair-dir", pair, "--out", out,
                     "--hqnr-map")
        with open(out / "metrics.csv") as f:
            self.assertEqual(f.readline().strip(), "d_lambda,d_s,hqnr,q2n,sam,ergas,scc")
        row = read_csv(out / "metrics.csv")[0]
        self.assertAlmostEqual(float(row["sam"]), 0.0, places=5)
        self.assertEqual(float(row["ergas"]), 0.0)
        self.assertAlmostEqual(float(row["q2n"]), 1.0, places=8)
        self.assertEqual(load_array(out / "hqnr_map.arr").shape, (2, 2))
        self.assertTrue((out / "metrics.txt").exists())

    def test_eval_baselines_add_method_column(self):
        pair = self.synth()
        out = self.root / "eval"
        self.run_cli("eval", "--fused", pair / "gt.arr", "--pair-dir", pair, "--out", out, "--baselines")
        rows = read_csv(out / "metrics.csv")
        self.assertEqual([r["method"] for r in rows], ["fused", "nearest", "bicubic"])
        self.assertEqual(rows[0]["q2n"], "")

    def test_band_mismatch_exits_2(self):
        pair2 = self.synth("two")
        pair4 = self.root / "four"
        self.run_cli("synth", "--out", pair4, "--seed", "0", "--bands", "4")
        run = self.train(pair2)
        self.run_cli("infer", "--weights", run, "--pair-dir", pair4, "--out", self.root / "x", expect=2)
        self.run_cli("eval", "--fused", pair4 / "gt.arr", "--pair-dir", pair2, "--out", self.root / "y", expect=2)

    def test_missing_inputs_exit_2(self):
        self.run_cli("train", "--pair-dir", self.root / "nowhere", "--out", self.root / "z", expect=2)
        pair = self.synth()
        self.run_cli("infer", "--weights", self.root / "nowhere", "--pair-dir", pair, "--out", self.root / "z",
                     expect=2)


class AblateCommandTest(CliTestCase):
    def test_four_variants(self):
        pair = self.synth()
        out = self.root / "ablate"
        self.run_cli("ablate", "--pair-dir", pair, "--out", out, "--epochs", "2", *TINY_FLAGS)
        rows = read_csv(out / "ablation.csv")
        self.assertEqual([r["variant"] for r in rows], ["full", "no_l0", "no_l1", "no_l2"])
        self.assertEqual(len({r["weights_hash"] for r in rows}), 4)
        for r in rows:
            self.assertTrue((out / r["variant"] / "weights.bin").exists())
            self.assertTrue(0.0 <= float(r["hqnr"]) <= 1.0)
        no_l2 = TrainLog.from_csv(out / "no_l2" / "log.csv")
        self.assertTrue(np.all(np.array([rec.l2 for rec in no_l2.records]) == 0.0))


if __name__ == "__main__":
    unittest.main()
