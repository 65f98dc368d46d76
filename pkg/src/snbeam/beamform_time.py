"""Time-domain reference beamformers and the B-mode display chain.

``time_align`` resamples each channel onto the beam time axis via linear
interpolation, ``das`` averages the aligned channels, and
``mv_beamform`` computes spatially-smoothed, diagonally-loaded Capon
weights per depth.  ``envelope``/``log_compress``/``scan_convert`` turn
beam lines into displayable sector images.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import BeamLine, delay_tau

__all__ = [
    "AlignedCube",
    "MVConfig",
    "interp_weights",
    "time_align",
    "das",
    "mv_beamform",
    "envelope",
    "log_compress",
    "scan_convert",
    "bmode_image",
]


@dataclass(frozen=True)
class AlignedCube:
    """Time-aligned channels for one angle: data[j, m] = phi_m(tau_m(t_j))."""

    data: np.ndarray = field(repr=False)
    theta: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("aligned cube must be 2-D [N x M]")
        if not np.all(np.isfinite(data)):
            raise ValueError("aligned cube contains non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class MVConfig:
    """Minimum-variance parameters: subaperture L, temporal window W (odd),
    relative diagonal loading eps_dl."""

    L: int = 32
    W: int = 15
    eps_dl: float = 1e-2

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("subaperture length must be >= 1")
        if self.W < 1 or self.W % 2 == 0:
            raise ValueError("temporal window must be odd and >= 1")
        if self.eps_dl <= 0:
            raise ValueError("diagonal loading must be positive")


def interp_weights(theta, delta_m, config):
    """Linear-interpolation gather for evaluating a channel at tau_m(t_j).

    Returns (i0, w, valid): sample index, fractional weight, and a mask
    that is False outside the recorded support [0, N-1] or beyond the
    beam support T_B.  Shared by the time-domain aligner and the
    frequency-domain operator construction so both realize the exact
    same linear map.

    The delay is evaluated directly in sample units (tau is homogeneous
    of degree 1 in (t, delta/c), so tau(t_j) f_s = tau_samples(j) with
    g = delta f_s / c); the origin element then maps sample j to exactly
    j with zero fractional weight.
    """
    j = np.arange(config.N, dtype=float)
    pos = delay_tau(j, theta, delta_m * config.f_s, config.c)
    i0 = np.clip(np.floor(pos).astype(np.int64), 0, config.N - 2)
    w = pos - i0
    valid = (pos >= 0.0) & (pos <= config.N - 1.0)
    ia = int(np.argmin(np.abs(config.angles - theta)))
    if abs(config.angles[ia] - theta) < 1e-12:
        valid &= j <= config.beam_support(ia) * config.f_s
    return i0, w, valid


def time_align(frame_angle, geometry, config, theta):
    """Align one angle's channels [M x N] onto the beam grid -> [N x M]."""
    frame_angle = np.asarray(frame_angle, dtype=float)
    M, N = frame_angle.shape
    out = np.zeros((N, M))
    for m in range(M):
        i0, w, valid = interp_weights(theta, geometry.delta[m], config)
        x = frame_angle[m]
        out[:, m] = np.where(valid, (1.0 - w) * x[i0] + w * x[i0 + 1], 0.0)
    return AlignedCube(data=out, theta=float(theta))


def das(aligned):
    """Delay-and-sum: the unweighted mean over elements."""
    return BeamLine(samples=aligned.data.mean(axis=1), theta=aligned.theta)


def mv_beamform(aligned, mvcfg=None):
    """Minimum-variance (Capon) beamforming of an aligned cube.

    Per depth j, the covariance of length-L subaperture vectors is
    averaged over the M-L+1 subapertures and a centered temporal window
    of W samples (clipped at the line ends), loaded with
    eps_dl*trace(R)/L on the diagonal, and inverted against an all-ones
    steering vector (the data is already aligned).  Depths whose window
    is all-zero produce 0.
    """
    if mvcfg is None:
        mvcfg = MVConfig()
    X = aligned.data
    N, M = X.shape
    L = mvcfg.L
    if L > M:
        raise ValueError(f"subaperture L={L} exceeds element count M={M}")
    if L == M:
        sub = X[:, None, :]
    else:
        sub = sliding_window_view(X, L, axis=1)  # [N, P, L]
    P = sub.shape[1]
    R = np.einsum("jpl,jpk->jlk", sub, sub) / P

    hw = mvcfg.W // 2
    cs = np.concatenate([np.zeros((1, L, L)), np.cumsum(R, axis=0)], axis=0)
    j = np.arange(N)
    lo = np.clip(j - hw, 0, N)
    hi = np.clip(j + hw + 1, 0, N)
    Rs = (cs[hi] - cs[lo]) / (hi - lo)[:, None, None]

    tr = np.trace(Rs, axis1=1, axis2=2)
    ok = tr > 0
    out = np.zeros(N)
    if np.any(ok):
        Rl = Rs[ok] + (mvcfg.eps_dl * tr[ok] / L)[:, None, None] * np.eye(L)[None]
        ones = np.broadcast_to(np.ones((L, 1)), (int(ok.sum()), L, 1))
        w = np.linalg.solve(Rl, ones)[..., 0]
        denom = w.sum(axis=1)
        w = w / denom[:, None]
        out[ok] = np.einsum("jpl,jl->j", sub[ok], w) / P
    return BeamLine(samples=out, theta=aligned.theta)


def envelope(line):
    """Magnitude of the analytic signal via the frequency-domain Hilbert
    method: zero the negative frequencies, double the positive ones,
    inverse transform, take the magnitude."""
    x = line.samples if isinstance(line, BeamLine) else np.asarray(line, dtype=float)
    n = len(x)
    if n == 0:
        return np.zeros(0)
    X = np.fft.fft(x)
    h = np.zeros(n)
    if n % 2 == 0:
        h[0] = h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[0] = 1.0
        h[1 : (n + 1) // 2] = 2.0
    return np.abs(np.fft.ifft(X * h))


def log_compress(env, dynamic_range_db=60.0):
    """Map an envelope to [0, 1]: 1 + 20 log10(env/max) / DR, clamped.

    The maximum maps to 1, anything at or below -DR dB maps to 0, and an
    all-zero input stays all-zero.
    """
    if dynamic_range_db <= 0:
        raise ValueError("dynamic range must be positive")
    env = np.asarray(env, dtype=float)
    peak = env.max() if env.size else 0.0
    if peak <= 0:
        return np.zeros_like(env)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(env / peak)
    return np.clip(1.0 + db / dynamic_range_db, 0.0, 1.0)


def bmode_image(lines, dynamic_range_db=60.0):
    """Envelope-detect and log-compress a stack of beam lines.

    ``lines`` is [n_angles x N] (or a list of BeamLines); normalization
    is global over the image so relative line brightness is preserved.
    """
    arr = np.stack([l.samples if isinstance(l, BeamLine) else np.asarray(l) for l in lines])
    env = np.stack([envelope(row) for row in arr])
    return log_compress(env, dynamic_range_db)


def scan_convert(polar_image, config, width=512, height=512, r_min=0.0):
    """Resample a polar image [n_angles x N] onto a Cartesian raster.

    Rows index the transmit angles of ``config``, columns the sample
    depths r_j = c t_j / 2.  Bilinear interpolation on the (theta, r)
    grid; pixels outside the sector are 0.  Returns (raster, extent)
    where extent = (x_min, x_max, z_min, z_max) in meters.
    """
    img = np.asarray(polar_image, dtype=float)
    n_ang, N = img.shape
    if n_ang != config.n_angles:
        raise ValueError("polar image rows must match the config angle count")
    angles = config.angles
    r = config.c * config.times / 2.0
    r_max = r[-1]

    x_max = r_max * np.sin(max(abs(angles[0]), abs(angles[-1])))
    x_min = -x_max
    if x_max == 0.0:
        x_max, x_min = r_max * 0.05, -r_max * 0.05
    z_min, z_max = r_min, r_max
    xs = np.linspace(x_min, x_max, width)
    zs = np.linspace(z_min, z_max, height)
    X, Z = np.meshgrid(xs, zs)
    rr = np.hypot(X, Z)
    tt = np.arctan2(X, Z)

    inside = (rr >= max(r_min, r[0])) & (rr <= r_max) & (tt >= angles[0]) & (tt <= angles[-1])

    # fractional indices on the (angle, depth) grid
    fi = np.interp(tt, angles, np.arange(n_ang))
    fj = np.interp(rr, r, np.arange(N))
    i0 = np.clip(np.floor(fi).astype(int), 0, n_ang - 2) if n_ang > 1 else np.zeros_like(fi, int)
    j0 = np.clip(np.floor(fj).astype(int), 0, N - 2)
    wi = (fi - i0) if n_ang > 1 else np.zeros_like(fi)
    wj = fj - j0
    i1 = np.minimum(i0 + 1, n_ang - 1)
    raster = (
        (1 - wi) * (1 - wj) * img[i0, j0]
        + (1 - wi) * wj * img[i0, j0 + 1]
        + wi * (1 - wj) * img[i1, j0]
        + wi * wj * img[i1, j0 + 1]
    )
    raster[~inside] = 0.0
    return raster, (x_min, x_max, z_min, z_max)
