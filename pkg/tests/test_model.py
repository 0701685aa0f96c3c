import tempfile
import unittest
from collections import OrderedDict
from pathlib import Path
from types import SimpleNamespace
from unittest import mock

import numpy as np

from gzap.autodiff import Tensor, backward, no_grad, ops
from gzap.infra.errors import ArrayFormatError, SensorError, ShapeError
from gzap.infra.persistence import MANIFEST_FILE, WEIGHTS_FILE, PersistenceManager
from gzap.model.coords import axis_neighbors, make_coord_grid, neighbor_weights, output_size, round_half_up
from gzap.model.inrconv import INRConv, InrconvHyper, InrconvWeights, init_weights
from gzap.model.serialization import load_weights, save_weights, weights_hash

TINY = InrconvHyper(bands=2, ratio=4, feature_dim=4, n_resblocks=1, mlp_hidden=(8,), query_dim=4)


def tiny_inputs(seed: int = 0, h: int = 2, w: int = 2, c: int = 2):
    rng = np.random.default_rng(seed)
    pan = rng.random((4 * h, 4 * w)).astype(np.float32)
    lrms = rng.random((h, w, c)).astype(np.float32)
    return pan, lrms


class CoordGridTest(unittest.TestCase):
    def test_pixel_centres(self):
        np.testing.assert_allclose(make_coord_grid(2, 2, 1).ys, [-0.5, 0.5])
        np.testing.assert_allclose(make_coord_grid(2, 2, 2).xs, [-0.75, -0.25, 0.25, 0.75])
        self.assertEqual(make_coord_grid(2, 2, 2).cell, (0.5, 0.5))

    def test_grid_is_symmetric_for_any_scale(self):
        for N in (1.0, 1.6, 2.5, 3.4):
            grid = make_coord_grid(8, 6, N)
            np.testing.assert_allclose(grid.ys, -grid.ys[::-1], atol=1e-12)
            np.testing.assert_allclose(grid.xs, -grid.xs[::-1], atol=1e-12)
            self.assertGreater(grid.ys.min(), -1.0)

    def test_rounding_and_sizes(self):
        self.assertEqual(round_half_up(2.5), 3)
        self.assertEqual(round_half_up(2.49), 2)
        self.assertEqual(output_size(8, 8, 1.6), (13, 13))
        self.assertEqual(output_size(8, 8, 3.4), (27, 27))
        self.assertEqual(output_size(8, 6, 0.5), (4, 3))
        coords = make_coord_grid(2, 3, 1).coords()
        self.assertEqual(coords.shape, (6, 2))
        np.testing.assert_allclose(coords[1], [-0.5, 0.0])

    def test_non_positive_scale(self):
        for N in (0, -1.0):
            with self.assertRaises(ShapeError):
                output_size(8, 8, N)


class NeighbourWeightTest(unittest.TestCase):
    def test_partition_of_unity(self):
        rng = np.random.default_rng(0)
        qy, qx = rng.uniform(-1, 1, 10_000), rng.uniform(-1, 1, 10_000)
        for Hf, Wf in ((5, 7), (1, 4), (2, 2)):
            _, _, weights = neighbor_weights(qy, qx, Hf, Wf)
            np.testing.assert_allclose(weights.sum(axis=0), 1.0, atol=1e-12)
            self.assertGreaterEqual(weights.min(), 0.0)

    def test_centre_of_four_neighbours(self):
        rows, cols, weights = neighbor_weights(np.array([0.0]), np.array([0.0]), 2, 2)
        np.testing.assert_allclose(weights[:, 0], [0.25] * 4)
        np.testing.assert_array_equal(rows[:, 0], [0, 0, 1, 1])
        np.testing.assert_array_equal(cols[:, 0], [0, 1, 0, 1])

    def test_query_on_feature_centre(self):
        # -0.25 is the centre of feature pixel 1 on a 4-pixel axis
        rows, cols, weights = neighbor_weights(np.array([-0.25]), np.array([-0.25]), 4, 4)
        self.assertAlmostEqual(weights[0, 0], 1.0)
        self.assertEqual((rows[0, 0], cols[0, 0]), (1, 1))

    def test_edge_queries_collapse_onto_border(self):
        i0, i1, t = axis_neighbors(np.array([-1.0, 1.0]), 4)
        np.testing.assert_array_equal(i0, [0, 2])
        np.testing.assert_allclose(t, [0.0, 1.0])

    def test_out_of_domain(self):
        with self.assertRaises(ShapeError):
            axis_neighbors(np.array([1.1]), 4)


class InrconvForwardTest(unittest.TestCase):
    def setUp(self):
        self.model = INRConv(TINY, seed=3)
        self.pan, self.lrms = tiny_inputs()

    def test_output_shapes_across_scales(self):
        expected = {1.0: 8, 1.6: 13, 2.0: 16, 3.4: 27, 4.0: 32, 0.5: 4}
        with no_grad():
            for N, side in expected.items():
                self.assertEqual(self.model(self.pan, self.lrms, N).shape, (1, 2, side, side))

    def test_input_validation(self):
        with self.assertRaises(ShapeError):
            self.model.encode(self.pan, np.zeros((3, 3, 2), dtype=np.float32))
        with self.assertRaises(SensorError):
            self.model.encode(self.pan, np.zeros((2, 2, 3), dtype=np.float32))

    def test_zero_decoder_gives_zero_image(self):
        state = self.model.state()
        state.arrays["decoder.conv2.weight"][:] = 0.0
        state.arrays["decoder.conv2.bias"][:] = 0.0
        self.model.load_state(state)
        out = self.model.predict(self.pan, self.lrms, 2.0)
        np.testing.assert_array_equal(out.data, 0.0)

    def test_dense_query_matches_point_query(self):
        with no_grad():
            feat = self.model.encode(self.pan, self.lrms)
            grid = make_coord_grid(8, 8, 1.6)
            dense = self.model.query_all(feat, grid).data[0]
            for i, j in ((0, 0), (6, 3), (12, 12)):
                single = self.model.point_query(feat, (grid.ys[i], grid.xs[j]), grid.cell).data
                np.testing.assert_allclose(dense[:, i, j], single, rtol=1e-5, atol=1e-6)

    def test_chunked_inference_matches_single_pass(self):
        with no_grad():
            feat = self.model.encode(self.pan, self.lrms)
            grid = make_coord_grid(8, 8, 2.0)
            whole = self.model.query_all(feat, grid).data
            with mock.patch("gzap.model.inrconv.INFERENCE_CHUNK", 7):
                chunked = self.model.query_all(feat, grid).data
        np.testing.assert_allclose(chunked, whole, rtol=1e-6, atol=1e-7)

    def test_cell_size_changes_the_response(self):
        with no_grad():
            feat = self.model.encode(self.pan, self.lrms)
            a = self.model.point_query(feat, (0.1, -0.2), (0.25, 0.25)).data
            b = self.model.point_query(feat, (0.1, -0.2), (0.0625, 0.0625)).data
        self.assertFalse(np.allclose(a, b))

    def test_predict_is_clamped(self):
        out = self.model.predict(self.pan, self.lrms, 1.5)
        self.assertEqual(out.shape, (12, 12, 2))
        self.assertGreaterEqual(out.data.min(), 0.0)
        self.assertLessEqual(out.data.max(), 1.0)

    def test_gradients_match_finite_differences(self):
        step = 1e-3
        rng = np.random.default_rng(11)
        direction = rng.normal(size=(1, 2, 12, 12))
        out = self.model(self.pan, self.lrms, 1.5)
        backward(ops.sum(ops.mul(out, Tensor(direction))))
        analytic, numeric = [], []
        for name in ("encoder.head.weight", "encoder.body.0.conv2.bias", "mlp.0.weight", "mlp.1.bias",
                     "decoder.conv1.weight", "decoder.conv2.bias"):
            p = self.model[name]
            flat = p.data.reshape(-1)
            for idx in rng.choice(flat.size, size=min(4, flat.size), replace=False):
                original = flat[idx]
                values = []
                for delta in (step, -step):
                    flat[idx] = original + delta
                    with no_grad():
                        values.append(float(np.sum(self.model(self.pan, self.lrms, 1.5).data * direction)))
                flat[idx] = original
                numeric.append((values[0] - values[1]) / (2 * step))
                analytic.append(float(p.grad.reshape(-1)[idx]))
        analytic, numeric = np.array(analytic), np.array(numeric)
        err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-8)
        self.assertLess(err, 5e-2)


class InitAndSerializationTest(unittest.TestCase):
    def test_hyper_from_config_section(self):
        section = SimpleNamespace(feature_dim=4, n_resblocks=1, mlp_hidden=[8], query_dim=4)
        self.assertEqual(InrconvHyper.from_config(section, bands=2, ratio=4), TINY)
        self.assertEqual(TINY.mlp_in, 8)

    def test_init_is_seeded_and_bounded(self):
        a, b, c = init_weights(TINY, 0), init_weights(TINY, 0), init_weights(TINY, 1)
        self.assertEqual(weights_hash(a), weights_hash(b))
        self.assertNotEqual(weights_hash(a), weights_hash(c))
        bound = 1.0 / np.sqrt(2 * 2 * 9)
        self.assertLessEqual(np.abs(a.arrays["encoder.head.weight"]).max(), bound)
        self.assertLessEqual(np.abs(a.arrays["mlp.0.weight"]).max(), 1.0 / np.sqrt(TINY.mlp_in))

    def test_parameter_order_and_shapes(self):
        names = list(TINY.parameter_shapes())
        self.assertEqual(names[0], "encoder.head.weight")
        self.assertEqual(names[-1], "decoder.conv2.bias")
        self.assertEqual(TINY.parameter_shapes()["mlp.0.weight"], (8, 8))
        self.assertEqual(TINY.parameter_shapes()["decoder.conv2.weight"], (2, 4, 3, 3))

    def test_weights_validate_their_shapes(self):
        arrays = OrderedDict((k, v.copy()) for k, v in init_weights(TINY).arrays.items())
        arrays["mlp.0.bias"] = np.zeros(3, dtype=np.float32)
        with self.assertRaises(ShapeError):
            InrconvWeights(TINY, arrays)

    def test_round_trip_is_bit_exact(self):
        weights = init_weights(TINY, 5)
        with tempfile.TemporaryDirectory() as tmp:
            save_weights(PersistenceManager(tmp), weights)
            loaded = load_weights(tmp)
        self.assertEqual(loaded.hyper, TINY)
        for name, arr in weights.arrays.items():
            np.testing.assert_array_equal(loaded.arrays[name], arr)
        self.assertEqual(weights_hash(loaded), weights_hash(weights))

    def test_reloaded_model_predicts_identically(self):
        pan, lrms = tiny_inputs(2)
        model = INRConv(TINY, seed=9)
        with tempfile.TemporaryDirectory() as tmp:
            save_weights(PersistenceManager(tmp), model.state())
            clone = INRConv.from_weights(load_weights(tmp))
        np.testing.assert_array_equal(model.predict(pan, lrms, 2.0).data, clone.predict(pan, lrms, 2.0).data)

    def test_manifest_mismatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            save_weights(PersistenceManager(tmp), init_weights(TINY))
            manifest = Path(tmp) / MANIFEST_FILE
            manifest.write_text(manifest.read_text().replace("feature_dim = 4", "feature_dim = 5"))
            with self.assertRaises(ShapeError):
                load_weights(tmp)

    def test_trailing_bytes_in_weight_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            save_weights(PersistenceManager(tmp), init_weights(TINY))
            with open(Path(tmp) / WEIGHTS_FILE, "ab") as f:
                f.write(b"\x00\x00")
            with self.assertRaises(ArrayFormatError):
                load_weights(tmp)

    def test_missing_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ArrayFormatError):
                load_weights(tmp)


if __name__ == "__main__":
    unittest.main()
