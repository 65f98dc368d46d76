import numpy as np
import pytest

from snbeam.beamform_fourier import build_q_table
from snbeam.beamform_time import das, time_align
from snbeam.core import AcquisitionConfig, ArrayGeometry, default_config, default_geometry, symmetric_angles
from snbeam.metrics import nrmse
from snbeam.sampling import (
    TrainingSample,
    default_sparse_pattern,
    denormalize,
    make_degraded_channels,
    normalize_dataset,
    scheme_by_label,
    scheme_full,
    scheme_x5,
    scheme_x9,
    scheme_x11,
    slice_cubes,
    spatial_subsample,
)
from snbeam.simulate import Phantom, simulate_rf

C, FC, FS = 1540.0, 2.7e6, 10.9e6


@pytest.fixture(scope="module")
def setup():
    geo = ArrayGeometry.centered(8, C / (2 * FC) * 4)
    cfg = AcquisitionConfig(c=C, f_c=FC, f_s=FS, N=240, angles=symmetric_angles(5, 40.0))
    return geo, cfg


@pytest.fixture(scope="module")
def frame(setup):
    geo, cfg = setup
    ph = Phantom([0.006, 0.009, 0.013], [0.0, 0.12, -0.1], [1.0, 0.7, 0.9])
    return simulate_rf(ph, geo, cfg, snr_db=25, seed=11)


@pytest.fixture(scope="module")
def tables(setup):
    geo, cfg = setup
    return {
        1.0: {ia: build_q_table(geo, cfg, th, 1.0) for ia, th in enumerate(cfg.angles)},
        0.95: {ia: build_q_table(geo, cfg, th, 0.95) for ia, th in enumerate(cfg.angles)},
    }


class TestSchemes:
    def test_reference_reduction_factors(self):
        geo, cfg = default_geometry(), default_config(9)
        assert scheme_x5(cfg, geo).temporal_K == 400
        assert scheme_x9(cfg, geo).temporal_K == 220
        assert scheme_x5(cfg, geo).reduction_factor(1918, 64) == pytest.approx(4.8, abs=0.1)
        assert scheme_x9(cfg, geo).reduction_factor(1918, 64) == pytest.approx(8.7, abs=0.1)
        assert scheme_x11(cfg, geo).reduction_factor(1918, 64) == pytest.approx(11.4, abs=0.1)

    def test_labels(self):
        geo, cfg = default_geometry(), default_config(9)
        for label in ("full", "x5", "x9", "x11"):
            assert scheme_by_label(label, cfg, geo).label == label
        with pytest.raises(ValueError):
            scheme_by_label("x7", cfg, geo)


class TestSparsePattern:
    def test_cardinality_and_range(self):
        p = default_sparse_pattern(64)
        assert len(p) == 27
        assert len(np.unique(p)) == 27
        assert p.min() >= 0 and p.max() <= 63
        assert np.all(np.diff(p) > 0)

    def test_near_reflection_symmetry(self):
        # an odd-cardinality subset of 0..63 cannot be exactly symmetric
        # under m -> 63-m; the pattern is symmetric except the unpaired
        # central element.
        p = set(default_sparse_pattern(64).tolist())
        refl = {63 - m for m in p}
        assert refl.symmetric_difference(p) <= {31, 32}

    def test_dense_flanks(self):
        p = set(default_sparse_pattern(64).tolist())
        assert set(range(0, 8)) <= p
        assert set(range(56, 64)) <= p

    def test_unsupported_M(self):
        with pytest.raises(ValueError):
            default_sparse_pattern(32)


class TestSpatialSubsample:
    def test_identity(self):
        x = np.random.default_rng(0).standard_normal((3, 8, 16))
        out = spatial_subsample(x, np.arange(8))
        assert np.array_equal(out, x)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            spatial_subsample(np.zeros((2, 8, 4)), np.array([], dtype=int))

    def test_default_pattern_zero_rows(self):
        x = np.ones((2, 64, 10))
        out = spatial_subsample(x, default_sparse_pattern(64))
        zero_rows = np.flatnonzero(~out[0].any(axis=1))
        assert len(zero_rows) == 37
        kept = np.flatnonzero(out[0].any(axis=1))
        assert np.array_equal(kept, default_sparse_pattern(64))
        # reduction factor with the x5 band: ~11-fold
        assert (1918 * 64) / (400 * 27) == pytest.approx(11.4, abs=0.1)


class TestMakeDegraded:
    def test_full_scheme_equals_time_align(self, setup, frame, tables):
        geo, cfg = setup
        deg, dropped = make_degraded_channels(frame, scheme_full(cfg, geo), tables[1.0])
        assert dropped == 0.0
        for ia, th in enumerate(cfg.angles):
            ref = time_align(frame.data[ia], geo, cfg, th).data.T
            assert nrmse(deg[ia], ref) < 1e-9

    def test_zero_frame(self, setup, tables):
        geo, cfg = setup
        from snbeam.core import RFFrame

        zero = RFFrame(data=np.zeros((cfg.n_angles, geo.M, cfg.N)), geometry=geo, config=cfg)
        deg, _ = make_degraded_channels(zero, scheme_full(cfg, geo), tables[1.0])
        assert not deg.any()

    def test_x5_degrades(self, setup, frame, tables):
        geo, cfg = setup
        full, _ = make_degraded_channels(frame, scheme_full(cfg, geo), tables[1.0])
        x5, dropped = make_degraded_channels(frame, scheme_x5(cfg, geo), tables[0.95])
        assert dropped > 0.0
        assert nrmse(x5, full) > 0.0

    def test_linearity_in_frame(self, setup, frame, tables):
        geo, cfg = setup
        from snbeam.core import RFFrame

        scaled = RFFrame(data=2.0 * frame.data, geometry=geo, config=cfg)
        a, _ = make_degraded_channels(frame, scheme_x5(cfg, geo), tables[0.95])
        b, _ = make_degraded_channels(scaled, scheme_x5(cfg, geo), tables[0.95])
        assert np.allclose(b, 2.0 * a, rtol=1e-10, atol=1e-14)

    def test_missing_table(self, setup, frame):
        geo, cfg = setup
        with pytest.raises(ValueError, match="angle index"):
            make_degraded_channels(frame, scheme_full(cfg, geo), {})


class TestSliceCubes:
    def test_three_angles_one_sample(self):
        deg = np.random.default_rng(1).standard_normal((3, 4, 32))
        targets = [np.zeros(32)] * 3
        samples = slice_cubes(deg, targets)
        assert len(samples) == 1
        assert samples[0].angle_index == 1

    def test_count_65_angles(self):
        deg = np.zeros((65, 2, 8))
        samples = slice_cubes(deg, [np.zeros(8)] * 65)
        assert len(samples) == 63

    def test_target_bit_identity(self):
        rng = np.random.default_rng(2)
        deg = rng.standard_normal((5, 4, 16))
        targets = [rng.standard_normal(16) for _ in range(5)]
        samples = slice_cubes(deg, targets)
        for s in samples:
            assert np.array_equal(s.target, targets[s.angle_index])

    def test_layouts(self):
        deg = np.random.default_rng(3).standard_normal((4, 6, 10))
        t = [np.zeros(10)] * 4
        s_el = slice_cubes(deg, t, layout="elements-d2")
        assert s_el[0].input.shape == (10, 6, 3)
        s_an = slice_cubes(deg, t, layout="angles-d2")
        assert s_an[0].input.shape == (10, 3, 6)
        # same values, permuted axes
        assert np.array_equal(s_el[0].input.transpose(0, 2, 1), s_an[0].input)

    def test_too_few_angles(self):
        with pytest.raises(ValueError):
            slice_cubes(np.zeros((2, 4, 8)), [np.zeros(8)] * 2)


class TestNormalize:
    def _samples(self, scale=3.0):
        rng = np.random.default_rng(4)
        return [
            TrainingSample(
                input=rng.standard_normal((16, 4, 3)),
                target=scale * rng.standard_normal(16),
                angle_index=i + 1,
            )
            for i in range(4)
        ]

    def test_max_target_becomes_one(self):
        ds = normalize_dataset(self._samples())
        assert max(np.abs(s.target).max() for s in ds.samples) == pytest.approx(1.0)

    def test_idempotent(self):
        ds = normalize_dataset(self._samples())
        again = normalize_dataset(ds.samples)
        assert again.scale == pytest.approx(1.0)
        for a, b in zip(ds.samples, again.samples):
            assert np.allclose(a.input, b.input, rtol=1e-15)

    def test_roundtrip(self):
        samples = self._samples()
        ds = normalize_dataset(samples)
        for orig, normed in zip(samples, ds.samples):
            assert np.allclose(denormalize(normed.target, ds.scale), orig.target, rtol=1e-12)
            assert np.allclose(denormalize(normed.input, ds.scale), orig.input, rtol=1e-12)

    def test_all_zero_rejected(self):
        zero = [TrainingSample(input=np.zeros((8, 2, 3)), target=np.zeros(8), angle_index=1)]
        with pytest.raises(ValueError):
            normalize_dataset(zero)
