"""Image-quality metrics: FWHM resolution, CNR contrast, SSIM, NRMSE."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["RegionSpec", "fwhm", "cnr", "ssim", "nrmse"]


@dataclass(frozen=True)
class RegionSpec:
    """Pixel region: a disk (center, radius) or an axis-aligned rectangle.

    kind 'disk': center = (row, col), radius in pixels.
    kind 'rect': center = (row0, col0), extents = (rows, cols).
    """

    kind: str
    center: tuple
    radius: float = 0.0
    extents: tuple = (0, 0)

    def mask(self, shape):
        h, w = shape
        if self.kind == "disk":
            r0, c0 = self.center
            rr, cc = np.ogrid[:h, :w]
            m = (rr - r0) ** 2 + (cc - c0) ** 2 <= self.radius**2
        elif self.kind == "rect":
            r0, c0 = self.center
            dr, dc = self.extents
            m = np.zeros(shape, dtype=bool)
            m[int(r0) : int(r0 + dr), int(c0) : int(c0 + dc)] = True
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if not m.any():
            raise ValueError("region does not intersect the image")
        return m


def fwhm(profile, spacing=1.0):
    """Full width at half maximum of a nonnegative profile.

    Finds the global peak, walks outward to the nearest half-maximum
    crossings on both sides, interpolates them linearly, and returns
    crossing distance * spacing.  Raises if either side never crosses
    (peak at the boundary of the cut).
    """
    p = np.asarray(profile, dtype=float)
    if p.ndim != 1 or len(p) < 3:
        raise ValueError("profile must be a 1-D vector of at least 3 samples")
    ipk = int(np.argmax(p))
    half = p[ipk] / 2.0
    if p[ipk] <= 0:
        raise ValueError("profile has no positive peak")

    below = np.flatnonzero(p[:ipk] <= half)
    if len(below) == 0:
        raise ValueError("no half-maximum crossing left of the peak")
    i = below[-1]
    left = i + (half - p[i]) / (p[i + 1] - p[i])

    below = np.flatnonzero(p[ipk + 1 :] <= half)
    if len(below) == 0:
        raise ValueError("no half-maximum crossing right of the peak")
    j = ipk + 1 + below[0]
    right = j - (half - p[j]) / (p[j - 1] - p[j])

    return (right - left) * spacing


def cnr(image, cyst, background):
    """Contrast-to-noise ratio |mu_c - mu_b| / sigma_b on a B-mode image."""
    img = np.asarray(image, dtype=float)
    mc = img[cyst.mask(img.shape)].mean()
    bg = img[background.mask(img.shape)]
    sb = bg.std()
    if sb == 0:
        raise ValueError("background region has zero variance")
    return float(abs(mc - bg.mean()) / sb)


def ssim(x, y, window=8, data_range=None, gaussian=False):
    """Mean structural similarity over sliding windows (stride 1).

    Uniform window weighting by default; ``gaussian`` switches to the
    11x11 sigma-1.5 Gaussian-weighted variant.  C1 = (0.01 L)^2 and
    C2 = (0.03 L)^2 with L the value range of the reference image y (or
    ``data_range``).  Identical images score exactly 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("images must share a shape")
    if gaussian:
        window = 11
        g = np.exp(-0.5 * ((np.arange(window) - window // 2) / 1.5) ** 2)
        w2 = np.outer(g, g)
        w2 /= w2.sum()
    else:
        w2 = np.full((window, window), 1.0 / window**2)
    if min(x.shape) < window:
        raise ValueError(f"images smaller than the {window}x{window} window")
    L = data_range if data_range is not None else float(y.max() - y.min())
    if L <= 0:
        L = 1.0
    C1 = (0.01 * L) ** 2
    C2 = (0.03 * L) ** 2

    wx = sliding_window_view(x, (window, window))
    wy = sliding_window_view(y, (window, window))
    mx = np.einsum("abij,ij->ab", wx, w2)
    my = np.einsum("abij,ij->ab", wy, w2)
    vx = np.einsum("abij,ij->ab", wx * wx, w2) - mx * mx
    vy = np.einsum("abij,ij->ab", wy * wy, w2) - my * my
    cxy = np.einsum("abij,ij->ab", wx * wy, w2) - mx * my

    num = (2 * mx * my + C1) * (2 * cxy + C2)
    den = (mx * mx + my * my + C1) * (vx + vy + C2)
    return float(np.mean(num / den))


def nrmse(x, ref):
    """||x - ref||_2 / ||ref||_2 over flattened arrays."""
    x = np.asarray(x, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise ValueError("reference has zero norm")
    return float(np.linalg.norm(x - ref) / denom)
