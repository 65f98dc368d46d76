"""Classical beamforming walkthrough: DAS and minimum variance.

Simulates a 3x3 point-scatterer grid on a 64-element phased array,
beamforms every line with both methods, and compares lateral resolution.
Writes B-mode sector images next to this script.

Run:  python demos/demo_das_vs_mv.py
"""

import os

import numpy as np

from snbeam import io as snbio
from snbeam.beamform_time import MVConfig, bmode_image, das, envelope, mv_beamform, scan_convert, time_align
from snbeam.core import AcquisitionConfig, ArrayGeometry, symmetric_angles
from snbeam.metrics import fwhm
from snbeam.simulate import point_grid_phantom, simulate_rf

HERE = os.path.dirname(__file__)

# quarter-length lines keep the demo quick; geometry matches the real probe
c, f_c, f_s, N = 1540.0, 2.7e6, 10.9e6, 512
geo = ArrayGeometry.centered(64, c / (2 * f_c))
cfg = AcquisitionConfig(c=c, f_c=f_c, f_s=f_s, N=N, angles=symmetric_angles(41, 24.0))
print(f"array: {geo.M} elements at {geo.pitch * 1e3:.3f} mm pitch")
print(f"lines: {cfg.n_angles} angles over +-12 deg, depth {cfg.depth_max * 1e3:.0f} mm")

depths = [0.012, 0.020, 0.028]
phantom = point_grid_phantom(depths, [0.0], 1.0)
frame = simulate_rf(phantom, geo, cfg, snr_db=40.0, seed=0, sigma_theta_deg=5.0)
print(f"simulated {len(phantom)} scatterers -> frame {frame.shape}")

mvcfg = MVConfig(L=32, W=15)
das_lines, mv_lines = [], []
for ia, theta in enumerate(cfg.angles):
    aligned = time_align(frame.data[ia], geo, cfg, theta)
    das_lines.append(das(aligned).samples)
    mv_lines.append(mv_beamform(aligned, mvcfg).samples)
das_lines, mv_lines = np.stack(das_lines), np.stack(mv_lines)

# lateral profiles through each scatterer
env_das = np.stack([envelope(l) for l in das_lines])
env_mv = np.stack([envelope(l) for l in mv_lines])
print("lateral FWHM (half-maximum width across lines):")
for r in depths:
    j = int(round(2 * r / c * f_s))
    j += int(np.argmax(env_das[:, j - 8 : j + 8].max(axis=0))) - 8
    mm_per_line = r * (cfg.angles[1] - cfg.angles[0]) * 1e3
    w_das = fwhm(env_das[:, j], spacing=mm_per_line)
    w_mv = fwhm(env_mv[:, j], spacing=mm_per_line)
    print(f"  depth {r * 1e3:4.0f} mm: DAS {w_das:.2f} mm   MV {w_mv:.2f} mm"
          f"   ratio {w_mv / w_das:.2f}")

for name, lines in (("das", das_lines), ("mv", mv_lines)):
    raster, _ = scan_convert(bmode_image(lines), cfg, width=384, height=384)
    out = os.path.join(HERE, f"demo_das_vs_mv_{name}.pgm")
    snbio.write_pgm(out, raster)
    print("wrote", out)
