"""End-to-end: degraded channel cubes in, MV-quality beam lines out.

A compressed version of the full pipeline (a handful of small frames, a
narrow network, a couple of minutes of training) that shows every stage:
simulation, MV targets, x5 sub-sampling, frequency-domain alignment,
training, and prediction on a held-out frame.

Run:  python demos/demo_train_deep_beamformer.py
"""

import os

import numpy as np

from snbeam import io as snbio
from snbeam.beamform_fourier import build_angle_tables
from snbeam.beamform_time import MVConfig, bmode_image, das, mv_beamform, time_align
from snbeam.core import AcquisitionConfig, ArrayGeometry, symmetric_angles
from snbeam.metrics import nrmse, ssim
from snbeam.neural import NetworkSpec
from snbeam.sampling import make_degraded_channels, normalize_dataset, scheme_x5, slice_cubes
from snbeam.simulate import SectorRegion, anechoic_cyst_phantom, simulate_rf
from snbeam.training import predict, train

HERE = os.path.dirname(__file__)

c, f_c, f_s, N = 1540.0, 2.7e6, 10.9e6, 256
geo = ArrayGeometry.centered(32, c / (2 * f_c))
cfg = AcquisitionConfig(c=c, f_c=f_c, f_s=f_s, N=N, angles=symmetric_angles(11, 16.0))
mvcfg = MVConfig(L=16, W=11)
scheme = scheme_x5(cfg, geo)
print(f"x5 scheme keeps {scheme.temporal_K} of {N // 2 + 1} Fourier bins per channel")

tables = build_angle_tables(geo, cfg, 0.95)
region = SectorRegion(0.005, 0.016, np.radians(-7.0), np.radians(7.0))

def speckle_frame(seed):
    ph = anechoic_cyst_phantom(region, (0.010, 0.0), 0.0015, 400.0, seed=seed)
    return simulate_rf(ph, geo, cfg, snr_db=30.0, seed=seed, sigma_theta_deg=5.0)

def mv_lines(frame):
    return [mv_beamform(time_align(frame.data[ia], geo, cfg, th), mvcfg)
            for ia, th in enumerate(cfg.angles)]

samples = []
for seed in range(6):
    frame = speckle_frame(seed)
    degraded, _ = make_degraded_channels(frame, scheme, tables)
    samples.extend(slice_cubes(degraded, mv_lines(frame)))
dataset = normalize_dataset(samples)
print(f"dataset: {len(dataset.samples)} samples from 6 frames (scale {dataset.scale:.3g})")

spec = NetworkSpec(in_channels=3, widths=(8, 16, 32), pool_d2=True, dtype="float32")
params, history = train(dataset, spec=spec, epochs=10, batch=8, lr=1e-3, seed=0, verbose=True)
print(f"validation SMSLE: {history.val_smsle[0]:.3f} -> {min(history.val_smsle):.3f}")

held = speckle_frame(99)
degraded, _ = make_degraded_channels(held, scheme, tables)
pred, angle_idx = predict(degraded, params, spec, scale=dataset.scale)
mv_ref = np.stack([l.samples for l in mv_lines(held)])[angle_idx]
das_deg = degraded.mean(axis=1)[angle_idx]

print(f"NRMSE vs MV target:  das-of-degraded {nrmse(das_deg, mv_ref):.3f}"
      f"   network {nrmse(pred, mv_ref):.3f}")
print(f"SSIM vs MV B-mode:   das-of-degraded "
      f"{ssim(bmode_image(das_deg), bmode_image(mv_ref)):.3f}"
      f"   network {ssim(bmode_image(pred), bmode_image(mv_ref)):.3f}")

for name, lines in (("target_mv", mv_ref), ("network", pred)):
    out = os.path.join(HERE, f"demo_train_{name}.pgm")
    snbio.write_pgm(out, bmode_image(lines))
    print("wrote", out)
