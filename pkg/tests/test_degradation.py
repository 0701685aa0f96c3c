import unittest

import numpy as np
from scipy import ndimage

from gzap.autodiff import Tensor
from gzap.degradation.mtf import (
    build_mtf_kernel,
    decimate,
    degrade_pair,
    degrade_tensor,
    gain_to_sigma,
    mtf_blur,
    mtf_blur_tensor,
)
from gzap.imagery.sensors import get_sensor
from gzap.imagery.synth import synth_pair
from gzap.infra.datamodels import ImagePair, MsImage, PanImage
from gzap.infra.errors import ShapeError


def response_at(taps_2d: np.ndarray, freq: float) -> float:
    """Magnitude of the kernel's DFT at horizontal frequency `freq` (cycles/sample)."""
    k = taps_2d.shape[-1]
    t = np.arange(k) - k // 2
    phase = np.exp(-2j * np.pi * freq * t)
    return float(abs(np.sum(taps_2d.astype(np.float64) * phase[None, :])))


class MtfKernelTest(unittest.TestCase):
    def test_nyquist_gain_is_matched(self):
        r = 4
        for gain in (0.1, 0.3, 0.5):
            kernel = build_mtf_kernel([gain], r, 41)
            measured = response_at(kernel.taps[0], 1.0 / (2 * r))
            self.assertAlmostEqual(measured, gain, delta=0.02 * gain)

    def test_unit_dc_gain(self):
        kernel = build_mtf_kernel([0.2, 0.3, 0.45], 4, 41)
        for b in range(3):
            self.assertAlmostEqual(float(kernel.taps[b].astype(np.float64).sum()), 1.0, delta=1e-5)

    def test_sigma_formula(self):
        self.assertAlmostEqual(gain_to_sigma(np.exp(-0.5), 4), 4 / np.pi, places=9)
        self.assertAlmostEqual(gain_to_sigma(np.exp(-np.pi ** 2 / 32), 4), 1.0, places=9)
        with self.assertRaises(ValueError):
            gain_to_sigma(1.0, 4)

    def test_kernel_size_must_be_odd(self):
        with self.assertRaises(ValueError):
            build_mtf_kernel([0.3], 4, 40)


class BlurDecimateTest(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_blur_keeps_size_and_constants(self):
        kernel = build_mtf_kernel([0.3, 0.3], 4, 41)
        img = MsImage(np.full((24, 20, 2), 0.42, dtype=np.float32))
        out = mtf_blur(img, kernel)
        self.assertEqual(out.shape, img.shape)
        np.testing.assert_allclose(out.data, 0.42, atol=1e-5)

    def test_blur_matches_direct_2d_filter(self):
        kernel = build_mtf_kernel([0.25], 4, 9)
        band = self.rng.random((30, 30)).astype(np.float32)
        out = mtf_blur(band, kernel)
        expected = ndimage.correlate(band.astype(np.float64), kernel.taps[0].astype(np.float64), mode="reflect")
        np.testing.assert_allclose(out, expected, atol=1e-5)

    def test_gaussian_blurs_compose(self):
        g1, g2 = 0.5, 0.35
        s1, s2 = gain_to_sigma(g1, 4), gain_to_sigma(g2, 4)
        composed = float(np.exp(-np.pi ** 2 * (s1 ** 2 + s2 ** 2) / 32))
        band = self.rng.random((64, 64)).astype(np.float32)
        twice = mtf_blur(mtf_blur(band, build_mtf_kernel([g1], 4, 41)), build_mtf_kernel([g2], 4, 41))
        once = mtf_blur(band, build_mtf_kernel([composed], 4, 41))
        np.testing.assert_allclose(twice[20:44, 20:44], once[20:44, 20:44], atol=1e-3)

    def test_decimation_offset(self):
        x = np.arange(16 * 16, dtype=np.float32).reshape(16, 16)
        np.testing.assert_array_equal(decimate(x, 4), x[1::4, 1::4])
        np.testing.assert_array_equal(decimate(x, 2), x[0::2, 0::2])
        x = np.arange(32 * 32, dtype=np.float32).reshape(32, 32)
        np.testing.assert_array_equal(decimate(decimate(x, 4), 4), x[5::16, 5::16])

    def test_decimate_rejects_indivisible(self):
        with self.assertRaises(ShapeError):
            decimate(np.zeros((10, 8)), 4)

    def test_tensor_path_matches_array_path(self):
        kernel = build_mtf_kernel([0.2, 0.4], 4, 41)
        arr = self.rng.random((48, 48, 2)).astype(np.float32)
        expected = mtf_blur(arr, kernel)
        got = mtf_blur_tensor(Tensor(arr.transpose(2, 0, 1)[None]), kernel).data[0].transpose(1, 2, 0)
        np.testing.assert_allclose(got, expected, atol=1e-5)
        degraded = degrade_tensor(Tensor(arr.transpose(2, 0, 1)[None]), kernel).data[0].transpose(1, 2, 0)
        np.testing.assert_allclose(degraded, decimate(expected, 4), atol=1e-5)


class DegradePairTest(unittest.TestCase):
    def test_level_shapes(self):
        sensor = get_sensor("synthetic", bands=3)
        pair = synth_pair(0, 16, 16, 3, sensor)
        one = degrade_pair(pair, levels=1)
        self.assertEqual(one.pan_1.shape, (16, 16))
        self.assertEqual(one.lrms_1.shape, (4, 4, 3))
        self.assertIsNone(one.pan_2)
        two = degrade_pair(pair, levels=2)
        self.assertEqual(two.pan_2.shape, (4, 4))
        self.assertEqual(two.lrms_2.shape, (1, 1, 3))
        np.testing.assert_array_equal(two.lrms_1.data, one.lrms_1.data)

    def test_second_level_needs_divisible_lrms(self):
        sensor = get_sensor("synthetic", bands=2)
        pair = synth_pair(0, 8, 8, 2, sensor)
        self.assertEqual(degrade_pair(pair, levels=1).lrms_1.shape, (2, 2, 2))
        with self.assertRaises(ShapeError):
            degrade_pair(pair, levels=2)

    def test_constant_scene_stays_constant(self):
        sensor = get_sensor("synthetic", bands=2)
        pan = PanImage(np.full((32, 32), 0.3, dtype=np.float32))
        lrms = MsImage(np.full((8, 8, 2), 0.6, dtype=np.float32))
        pair = ImagePair(pan=pan, lrms=lrms, sensor=sensor)
        out = degrade_pair(pair, levels=1)
        np.testing.assert_allclose(out.pan_1.data, 0.3, atol=1e-5)
        np.testing.assert_allclose(out.lrms_1.data, 0.6, atol=1e-5)


if __name__ == "__main__":
    unittest.main()
