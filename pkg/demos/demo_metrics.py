"""The evaluation metrics on controlled inputs.

FWHM on analytic profiles, CNR on a synthetic cyst image, SSIM under
increasing distortion, and NRMSE conventions.

Run:  python demos/demo_metrics.py
"""

import numpy as np

from snbeam.metrics import RegionSpec, cnr, fwhm, nrmse, ssim

rng = np.random.default_rng(0)

print("-- FWHM ------------------------------------------------------")
sigma = 8.0
x = np.arange(-100, 101, dtype=float)
gauss = np.exp(-(x**2) / (2 * sigma**2))
print(f"gaussian, sigma={sigma}: measured {fwhm(gauss):.3f}, "
      f"closed form 2*sqrt(2 ln 2)*sigma = {2 * np.sqrt(2 * np.log(2)) * sigma:.3f}")
print(f"triangle [0, 1, 0]: {fwhm(np.array([0.0, 1.0, 0.0])):.3f} (exact 1.0)")

print()
print("-- CNR -------------------------------------------------------")
img = 0.55 + 0.08 * rng.standard_normal((96, 96))   # speckle background
zz, xx = np.ogrid[:96, :96]
cyst_mask = (zz - 48) ** 2 + (xx - 48) ** 2 < 14**2
img[cyst_mask] = 0.12 + 0.03 * rng.standard_normal(int(cyst_mask.sum()))  # anechoic
cyst = RegionSpec(kind="disk", center=(48, 48), radius=10)
background = RegionSpec(kind="rect", center=(8, 8), extents=(24, 24))
print(f"anechoic cyst vs speckle: CNR = {cnr(img, cyst, background):.2f}")
print(f"affine remap (2x + 0.1):  CNR = {cnr(2 * img + 0.1, cyst, background):.2f} (unchanged)")

print()
print("-- SSIM ------------------------------------------------------")
ref = img
print(f"identical images:      {ssim(ref, ref):.4f}")
for snr_db in (30, 20, 10):
    noisy = ref + ref.std() * 10 ** (-snr_db / 20) * rng.standard_normal(ref.shape)
    print(f"noise at {snr_db:2d} dB:        {ssim(noisy, ref):.4f}")
blur = (ref + np.roll(ref, 1, 0) + np.roll(ref, -1, 0)
        + np.roll(ref, 1, 1) + np.roll(ref, -1, 1)) / 5
print(f"3x3-ish blur:          {ssim(blur, ref):.4f}")

print()
print("-- NRMSE -----------------------------------------------------")
v = rng.standard_normal(500)
print(f"identical: {nrmse(v, v):.3f}   zero estimate: {nrmse(np.zeros(500), v):.3f}   "
      f"doubled: {nrmse(2 * v, v):.3f}")
