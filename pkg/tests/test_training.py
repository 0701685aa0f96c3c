import os
import tempfile
import time
import unittest
from unittest import mock

import numpy as np
from pydantic import ValidationError

from gzap.autodiff import Tensor, backward, no_grad, zero_grad
from gzap.config import ModelConfig, TrainConfig
from gzap.degradation.mtf import decimate, degrade_pair, ms_kernel, mtf_blur
from gzap.imagery.sensors import get_sensor
from gzap.imagery.synth import synth_pair
from gzap.infra.errors import NumericalError, SensorError, ShapeError
from gzap.infra.persistence import PersistenceManager
from gzap.metrics.baselines import baseline_resample
from gzap.metrics.no_reference import no_reference
from gzap.metrics.reference import psnr, sam
from gzap.model.inrconv import INRConv, InrconvHyper, init_weights
from gzap.model.serialization import weights_hash
from gzap.training.losses import loss_level0, loss_level1, loss_level2, total_loss
from gzap.training.trainer import EpochRecord, TrainLog, infer_reuse, learning_rate_at, prepare_degraded, train

TINY_MODEL = ModelConfig(feature_dim=4, n_resblocks=1, mlp_hidden=[8], query_dim=4)


def tiny_hyper(bands: int) -> InrconvHyper:
    return InrconvHyper.from_config(TINY_MODEL, bands, 4)


def forward_hwc(model: INRConv, pan, lrms, N: float) -> np.ndarray:
    with no_grad():
        return model(pan, lrms, N).data[0].transpose(1, 2, 0).astype(np.float64)


class TotalLossTest(unittest.TestCase):
    def test_weighted_sum(self):
        self.assertAlmostEqual(total_loss(0.1, 0.2, 0.5, (1.0, 1.0, 0.2)), 0.4)

    def test_disabled_terms(self):
        self.assertAlmostEqual(total_loss(None, 0.2, 0.5, (1.0, 1.0, 4.0)), 2.2)
        with self.assertRaises(ValueError):
            total_loss(None, None, None, (1.0, 1.0, 1.0))

    def test_tensor_terms_stay_on_tape(self):
        out = total_loss(Tensor(np.float32(0.5)), None, 0.25, (2.0, 1.0, 4.0))
        self.assertIsInstance(out, Tensor)
        self.assertAlmostEqual(out.item(), 2.0)


class TrainConfigTest(unittest.TestCase):
    def test_defaults(self):
        cfg = TrainConfig()
        self.assertEqual((cfg.epochs, cfg.learning_rate), (500, 5e-4))
        self.assertTrue(cfg.enable_l0 and cfg.enable_l1 and cfg.enable_l2)

    def test_band_profiles(self):
        cfg = TrainConfig()
        self.assertEqual(cfg.loss_weights(8), (1.0, 1.0, 0.2))
        self.assertEqual(cfg.loss_weights(4), (1.0, 1.0, 4.0))
        self.assertEqual(TrainConfig(gamma=0.5).loss_weights(8), (1.0, 1.0, 0.5))
        self.assertEqual(TrainConfig(band_profile="8band").loss_weights(4), (1.0, 1.0, 0.2))

    def test_validation(self):
        with self.assertRaises(ValidationError):
            TrainConfig(enable_l0=False, enable_l1=False, enable_l2=False)
        with self.assertRaises(ValidationError):
            TrainConfig(band_profile="custom", alpha=1.0)
        with self.assertRaises(ValidationError):
            TrainConfig(epochs=-1)

    def test_cosine_schedule(self):
        cfg = TrainConfig(epochs=11, learning_rate=1e-3, schedule="cosine", min_lr_ratio=0.1)
        self.assertAlmostEqual(learning_rate_at(cfg, 0), 1e-3)
        self.assertAlmostEqual(learning_rate_at(cfg, 5), 0.55e-3)
        self.assertAlmostEqual(learning_rate_at(cfg, 10), 1e-4)
        self.assertEqual(learning_rate_at(TrainConfig(learning_rate=2e-3), 7), 2e-3)


class LossOracleTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.sensor = get_sensor("synthetic", bands=2)
        cls.pair = synth_pair(4, 16, 16, 2, cls.sensor)
        cls.degraded = degrade_pair(cls.pair, levels=2)
        cls.model = INRConv(tiny_hyper(2), seed=1)

    def test_level0_matches_array_pipeline(self):
        mtf = ms_kernel(self.sensor)
        fused = forward_hwc(self.model, self.pair.pan, self.pair.lrms, 1)
        expected = np.mean(np.abs(decimate(mtf_blur(fused, mtf), 4) - self.pair.lrms.data))
        self.assertAlmostEqual(loss_level0(self.model, self.pair, mtf).item(), expected, places=5)

    def test_level1_matches_array_pipeline(self):
        out = forward_hwc(self.model, self.degraded.pan_1, self.degraded.lrms_1, 1)
        expected = np.mean(np.abs(out - self.pair.lrms.data))
        self.assertAlmostEqual(loss_level1(self.model, self.pair, self.degraded).item(), expected, places=5)

    def test_level2_matches_array_pipeline(self):
        low = forward_hwc(self.model, self.degraded.pan_2, self.degraded.lrms_2, 1)
        high = forward_hwc(self.model, self.degraded.pan_2, self.degraded.lrms_2, 4)
        expected = np.mean(np.abs(low - self.degraded.lrms_1.data)) + np.mean(np.abs(high - self.pair.lrms.data))
        self.assertAlmostEqual(loss_level2(self.model, self.pair, self.degraded).item(), expected, places=5)

    def test_level2_needs_second_level(self):
        with self.assertRaises(ShapeError):
            loss_level2(self.model, self.pair, degrade_pair(self.pair, levels=1))

    def test_every_parameter_receives_gradient(self):
        zero_grad(self.model.parameters())
        total = total_loss(
            loss_level0(self.model, self.pair, ms_kernel(self.sensor)),
            loss_level1(self.model, self.pair, self.degraded),
            loss_level2(self.model, self.pair, self.degraded),
            (1.0, 1.0, 4.0),
        )
        backward(total)
        for name, p in self.model.named_parameters():
            self.assertIsNotNone(p.grad, name)
            self.assertTrue(np.isfinite(p.grad).all(), name)
        self.assertGreater(np.abs(self.model["decoder.conv2.bias"].grad).sum(), 0.0)
        zero_grad(self.model.parameters())


class TrainLoopTest(unittest.TestCase):
    def setUp(self):
        self.pair = synth_pair(2, 16, 16, 2, get_sensor("synthetic", bands=2))

    def test_zero_epochs_returns_initial_weights(self):
        weights, log = train(self.pair, TrainConfig(epochs=0, seed=7), TINY_MODEL)
        self.assertEqual(len(log), 0)
        self.assertEqual(weights_hash(weights), weights_hash(init_weights(tiny_hyper(2), 7)))
        start = init_weights(tiny_hyper(2), 3)
        again, _ = train(self.pair, TrainConfig(epochs=0), TINY_MODEL, initial_weights=start)
        self.assertEqual(weights_hash(again), weights_hash(start))

    def test_training_is_deterministic(self):
        cfg = TrainConfig(epochs=2, learning_rate=1e-3, seed=3)
        w1, log1 = train(self.pair, cfg, TINY_MODEL)
        w2, log2 = train(self.pair, cfg, TINY_MODEL)
        self.assertEqual(weights_hash(w1), weights_hash(w2))
        np.testing.assert_array_equal(log1.totals, log2.totals)
        self.assertNotEqual(weights_hash(w1), weights_hash(init_weights(tiny_hyper(2), 3)))

    def test_epoch_callback(self):
        seen = []
        train(self.pair, TrainConfig(epochs=2, enable_l2=False), TINY_MODEL, on_epoch=lambda r: seen.append(r.epoch))
        self.assertEqual(seen, [0, 1])

    def test_non_finite_loss_aborts_with_epoch(self):
        with mock.patch(
            "gzap.training.trainer.loss_level1", side_effect=NumericalError("overflow in forward")
        ):
            with self.assertRaises(NumericalError) as ctx:
                train(self.pair, TrainConfig(epochs=3), TINY_MODEL)
        self.assertEqual(ctx.exception.epoch, 0)
        self.assertIn("epoch 0", str(ctx.exception))

    def test_disabled_levels_skip_their_inputs(self):
        with mock.patch("gzap.training.trainer.degrade_pair") as patched:
            _, log = train(self.pair, TrainConfig(epochs=1, enable_l1=False, enable_l2=False), TINY_MODEL)
        patched.assert_not_called()
        self.assertEqual((log.final.l1, log.final.l2), (0.0, 0.0))
        self.assertGreater(log.final.l0, 0.0)

        cfg = TrainConfig(enable_l2=False)
        self.assertIsNone(prepare_degraded(self.pair, TrainConfig(enable_l1=False, enable_l2=False)))
        self.assertIsNone(prepare_degraded(self.pair, cfg).pan_2)
        self.assertIsNotNone(prepare_degraded(self.pair, TrainConfig()).pan_2)

    def test_loss_decreases(self):
        cfg = TrainConfig(epochs=25, learning_rate=5e-3, seed=0)
        _, log = train(self.pair, cfg, TINY_MODEL)
        self.assertEqual(len(log), 25)
        self.assertLess(log.totals[-5:].mean(), log.totals[0])

    def test_initial_weights_must_match(self):
        other = init_weights(tiny_hyper(3))
        with self.assertRaises(SensorError):
            train(self.pair, TrainConfig(epochs=1), TINY_MODEL, initial_weights=other)


class TrainLogTest(unittest.TestCase):
    def test_csv_round_trip_and_smoothing(self):
        log = TrainLog()
        for i, total in enumerate((4.0, 2.0, 6.0, 0.0)):
            log.append(EpochRecord(i, total, total, 0.0, 0.0, 0.1 * i))
        np.testing.assert_allclose(log.smoothed_total(window=2), [4.0, 3.0, 4.0, 3.0])
        with tempfile.TemporaryDirectory() as tmp:
            path = log.to_csv(PersistenceManager(tmp))
            with open(path) as f:
                self.assertEqual(f.readline().strip(), "epoch,total,l0,l1,l2,seconds")
            loaded = TrainLog.from_csv(path)
        self.assertEqual(loaded.records, log.records)


class InferReuseTest(unittest.TestCase):
    def test_band_mismatch(self):
        pair = synth_pair(0, 8, 8, 2, get_sensor("synthetic", bands=2))
        with self.assertRaises(SensorError):
            infer_reuse(init_weights(tiny_hyper(3)), pair, 2.0)
        self.assertEqual(infer_reuse(init_weights(tiny_hyper(2)), pair, 2.0).shape, (64, 64, 2))


class WeightReuseTest(unittest.TestCase):
    def test_reused_weights_match_per_pair_training(self):
        sensor = get_sensor("synthetic", bands=4)
        pair_a, pair_b = synth_pair(0, 16, 16, 4, sensor), synth_pair(1, 16, 16, 4, sensor)
        cfg = TrainConfig(epochs=30, learning_rate=5e-3)
        weights_a, _ = train(pair_a, cfg, TINY_MODEL)

        start = time.perf_counter()
        weights_b, _ = train(pair_b, cfg, TINY_MODEL)
        train_seconds = time.perf_counter() - start
        start = time.perf_counter()
        reused = infer_reuse(weights_a, pair_b, 1)
        reuse_seconds = time.perf_counter() - start

        own = infer_reuse(weights_b, pair_b, 1)
        hqnr_reused = no_reference(reused, pair_b.pan, pair_b.lrms, sensor)[2]
        hqnr_own = no_reference(own, pair_b.pan, pair_b.lrms, sensor)[2]
        self.assertLessEqual(abs(hqnr_reused - hqnr_own), 0.05)
        self.assertGreaterEqual(train_seconds, 50 * reuse_seconds)


@unittest.skipUnless(os.environ.get("GZAP_SLOW"), "set GZAP_SLOW=1 for the full-size run")
class AcceptanceTest(unittest.TestCase):
    def test_default_training_beats_bicubic(self):
        pair = synth_pair(0, 16, 16, 4, get_sensor("synthetic", bands=4))
        weights, log = train(pair, TrainConfig(), ModelConfig())
        self.assertEqual(len(log), 500)
        self.assertTrue(np.isfinite(log.totals).all())
        smoothed = log.smoothed_total(window=50)
        self.assertLessEqual(smoothed[499], smoothed[99])

        gt = pair.ground_truth
        fused = infer_reuse(weights, pair, 1)
        bicubic = baseline_resample(pair.lrms, pair.ratio, "bicubic")
        self.assertGreaterEqual(psnr(fused, gt), psnr(bicubic, gt) + 1.0)
        self.assertLess(sam(fused, gt), sam(bicubic, gt))



if __name__ == "__main__":
    unittest.main()
