import numpy as np
import pytest

from snbeam.metrics import RegionSpec, cnr, fwhm, nrmse, ssim


class TestFWHM:
    def test_rectangle(self):
        p = np.zeros(50)
        p[20:28] = 1.0
        # crossings interpolate half-way into the zero neighbors
        assert fwhm(p, spacing=1.0) == pytest.approx(8.0, abs=1.0)

    def test_triangle(self):
        assert fwhm(np.array([0.0, 1.0, 0.0]), spacing=1.0) == pytest.approx(1.0)

    def test_gaussian(self):
        # closed form: FWHM of exp(-x^2 / 2 sigma^2) is 2 sqrt(2 ln 2) sigma
        sigma = 7.3
        x = np.arange(-200, 201, dtype=float)
        p = np.exp(-(x**2) / (2 * sigma**2))
        expect = 2 * np.sqrt(2 * np.log(2)) * sigma
        assert expect == pytest.approx(2.3548 * sigma, rel=1e-3)
        assert fwhm(p, spacing=1.0) == pytest.approx(expect, rel=0.01)

    def test_amplitude_invariance(self):
        rng = np.random.default_rng(0)
        p = np.exp(-((np.arange(-60, 61)) ** 2) / (2 * 9.0**2))
        for a in rng.uniform(0.1, 100, 5):
            assert fwhm(a * p) == pytest.approx(fwhm(p), rel=1e-12)

    def test_spacing(self):
        p = np.exp(-((np.arange(-60, 61)) ** 2) / (2 * 5.0**2))
        assert fwhm(p, spacing=0.5) == pytest.approx(0.5 * fwhm(p, spacing=1.0))

    def test_boundary_peak_rejected(self):
        ramp = np.linspace(0, 1, 32)
        with pytest.raises(ValueError):
            fwhm(ramp)


class TestCNR:
    def _image(self):
        img = np.zeros((32, 32))
        img[8:16, 8:16] = 3.0  # "cyst" block
        img[20:28, 8:24][:, ::2] = 0.0
        img[20:28, 8:24][:, 1::2] = 2.0
        return img

    def test_equal_means_zero(self):
        img = np.full((16, 16), 0.7)
        img[2, 2] = 0.8  # keep background variance nonzero
        reg = RegionSpec(kind="rect", center=(0, 0), extents=(4, 4))
        bg = RegionSpec(kind="rect", center=(0, 0), extents=(4, 4))
        # identical regions: mu_c == mu_b
        assert cnr(img, reg, bg) == 0.0

    def test_alternating_background(self):
        # background {0, 2}: mu_b = 1, sigma_b = 1; cyst constant 3 -> CNR 2
        img = self._image()
        cyst = RegionSpec(kind="rect", center=(8, 8), extents=(8, 8))
        bg = RegionSpec(kind="rect", center=(20, 8), extents=(8, 16))
        assert cnr(img, cyst, bg) == pytest.approx(2.0)

    def test_affine_invariance(self):
        img = self._image()
        cyst = RegionSpec(kind="rect", center=(8, 8), extents=(8, 8))
        bg = RegionSpec(kind="rect", center=(20, 8), extents=(8, 16))
        base = cnr(img, cyst, bg)
        assert cnr(1.7 * img + 0.4, cyst, bg) == pytest.approx(base, rel=1e-12)

    def test_zero_variance_rejected(self):
        img = np.ones((16, 16))
        reg = RegionSpec(kind="rect", center=(0, 0), extents=(4, 4))
        with pytest.raises(ValueError):
            cnr(img, reg, reg)

    def test_disk_region(self):
        img = np.zeros((32, 32))
        disk = RegionSpec(kind="disk", center=(16, 16), radius=5)
        mask = disk.mask(img.shape)
        rr, cc = np.nonzero(mask)
        assert np.all((rr - 16) ** 2 + (cc - 16) ** 2 <= 25)


class TestSSIM:
    def test_identity_exact(self):
        x = np.random.default_rng(1).random((32, 40))
        assert ssim(x, x) == 1.0
        const = np.full((16, 16), 0.3)
        assert ssim(const, const) == 1.0

    def test_symmetry_with_shared_range(self):
        rng = np.random.default_rng(2)
        x, y = rng.random((24, 24)), rng.random((24, 24))
        assert ssim(x, y, data_range=1.0) == pytest.approx(ssim(y, x, data_range=1.0), rel=1e-12)

    def test_small_noise_band(self):
        rng = np.random.default_rng(3)
        x = rng.random((48, 48))
        # uniform noise at 40 dB PSNR: amplitude = 10^(-2) * range * sqrt(3)
        sigma = 10 ** (-40 / 20) * 1.0
        noise = rng.uniform(-sigma * np.sqrt(3), sigma * np.sqrt(3), x.shape)
        s = ssim(x, x + noise, data_range=1.0)
        assert 0.9 < s < 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((8, 9)))

    def test_gaussian_window_variant(self):
        x = np.random.default_rng(4).random((24, 24))
        assert ssim(x, x, gaussian=True) == 1.0


class TestNRMSE:
    def test_zero_error(self):
        x = np.random.default_rng(5).standard_normal(64)
        assert nrmse(x, x) == 0.0

    def test_zero_estimate(self):
        ref = np.random.default_rng(6).standard_normal(64)
        assert nrmse(np.zeros(64), ref) == pytest.approx(1.0)

    def test_double_reference(self):
        ref = np.random.default_rng(7).standard_normal(64)
        assert nrmse(2.0 * ref, ref) == pytest.approx(1.0)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            nrmse(np.ones(4), np.zeros(4))
