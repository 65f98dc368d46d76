"""Shared fixtures, most importantly the desk-scale training run used by
the resolution/contrast/similarity acceptance tests."""

import time

import numpy as np
import pytest

from snbeam.beamform_fourier import build_angle_tables
from snbeam.beamform_time import MVConfig, das, mv_beamform, time_align
from snbeam.core import AcquisitionConfig, ArrayGeometry, symmetric_angles
from snbeam.neural import NetworkSpec
from snbeam.sampling import make_degraded_channels, normalize_dataset, scheme_x5, slice_cubes
from snbeam.simulate import (
    Phantom,
    SectorRegion,
    anechoic_cyst_phantom,
    point_grid_phantom,
    simulate_rf,
)
from snbeam.training import predict, train

# toy acquisition: quarter-length lines, full 64-element aperture, fine
# angle pitch (0.75 deg) so lateral FWHM is resolvable
TOY = dict(c=1540.0, f_c=2.7e6, f_s=10.9e6, N=512, M=64, n_angles=25, span_deg=18.0)
SIGMA_TX_DEG = 5.0  # broad transmit so receive beamforming dominates resolution
TOY_EPOCHS = 50
TOY_LR = 5e-4
TOY_BATCH = 8
TOY_WIDTHS = (8, 16, 32)
# phantoms occupy 8..33 mm; image comparisons use the insonified depths
REGION = (0.008, 0.033)
CROP_MM = (9.0, 32.0)


@pytest.fixture(scope="session")
def toy_training():
    """Simulate >= 10 mixed frames, build the x5 dataset with MV targets,
    train the network, and evaluate held-out point and cyst frames.

    Shared by the resolution-ordering, toy-training and contrast
    acceptance criteria (one training run serves all three).
    """
    t_start = time.perf_counter()
    geo = ArrayGeometry.centered(TOY["M"], TOY["c"] / (2 * TOY["f_c"]))
    cfg = AcquisitionConfig(
        c=TOY["c"],
        f_c=TOY["f_c"],
        f_s=TOY["f_s"],
        N=TOY["N"],
        angles=symmetric_angles(TOY["n_angles"], TOY["span_deg"]),
    )
    mvcfg = MVConfig(L=32, W=15)
    scheme = scheme_x5(cfg, geo)
    tables = build_angle_tables(geo, cfg, 0.95)

    def sim(ph, seed):
        return simulate_rf(ph, geo, cfg, snr_db=30.0, seed=seed, sigma_theta_deg=SIGMA_TX_DEG)

    region = SectorRegion(REGION[0], REGION[1], np.radians(-8.0), np.radians(8.0))
    rng = np.random.default_rng(1234)
    train_frames = []
    for i in range(5):  # point frames: six staggered scatterers each
        depths = 0.010 + 0.0042 * np.arange(6) + 0.0007 * i
        angs = np.radians(rng.uniform(-6.0, 6.0, 6))
        train_frames.append(sim(Phantom(depths, angs, np.ones(6)), 100 + i))
    for i in range(4):  # anechoic cysts in speckle
        cy = anechoic_cyst_phantom(
            region,
            (0.016 + 0.003 * i, np.radians(-3.0 + 2.0 * i)),
            0.0025 + 0.0003 * i,
            120.0,
            seed=200 + i,
        )
        train_frames.append(sim(cy, 300 + i))
    train_frames.append(  # plain speckle
        sim(anechoic_cyst_phantom(region, (0.02, 0.0), 1e-9, 120.0, seed=400), 500)
    )
    assert len(train_frames) >= 10

    def mv_lines(frame):
        return [
            mv_beamform(time_align(frame.data[ia], geo, cfg, th), mvcfg)
            for ia, th in enumerate(cfg.angles)
        ]

    def das_lines(frame):
        return np.stack(
            [das(time_align(frame.data[ia], geo, cfg, th)).samples
             for ia, th in enumerate(cfg.angles)]
        )

    samples = []
    for fr in train_frames:
        deg, _ = make_degraded_channels(fr, scheme, tables)
        samples.extend(slice_cubes(deg, mv_lines(fr)))
    dataset = normalize_dataset(samples)

    spec = NetworkSpec(in_channels=3, widths=TOY_WIDTHS, pool_d2=True, dtype="float32")
    t_train0 = time.perf_counter()
    params, history = train(
        dataset, spec=spec, epochs=TOY_EPOCHS, batch=TOY_BATCH, lr=TOY_LR, seed=11
    )
    train_seconds = time.perf_counter() - t_train0

    held = {}
    held_specs = {
        "point": sim(point_grid_phantom([0.022], [0.0], 1.0), 600),
        "cyst": sim(
            anechoic_cyst_phantom(region, (0.020, 0.0), 0.003, 120.0, seed=700), 701
        ),
    }
    for key, fr in held_specs.items():
        deg, _ = make_degraded_channels(fr, scheme, tables)
        pred, angle_idx = predict(deg, params, spec, scale=dataset.scale)
        held[key] = {
            "mv": np.stack([l.samples for l in mv_lines(fr)]),
            "das": das_lines(fr),
            "pred": pred,
            "pred_angles": angle_idx,
        }

    # insonified depth range in samples, for image comparisons
    crop = tuple(
        int(round(2 * (mm * 1e-3) / cfg.c * cfg.f_s)) for mm in CROP_MM
    )

    return {
        "geo": geo,
        "cfg": cfg,
        "dataset_size": len(dataset.samples),
        "n_frames": len(train_frames),
        "history": history,
        "train_seconds": train_seconds,
        "total_seconds": time.perf_counter() - t_start,
        "held": held,
        "params": params,
        "spec": spec,
        "scale": dataset.scale,
        "crop": crop,
    }
