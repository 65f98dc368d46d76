"""Synthetic RF channel data: point scatterers, speckle, anechoic cysts.

The simulator is deliberately simple (single scattering, Gaussian pulse,
Gaussian transmit sensitivity, 1/r spreading, no attenuation): it is the
test bed for the beamforming and learning pipeline, not an acoustic
field solver.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import distance_dm

__all__ = [
    "PulseSpec",
    "Phantom",
    "SectorRegion",
    "pulse_waveform",
    "pulse_sigma",
    "point_grid_phantom",
    "anechoic_cyst_phantom",
    "simulate_rf",
]

# reference range of the 1/r spreading law
R0 = 0.01
# pulse support is truncated at +-PULSE_SUPPORT_SIGMAS * sigma
PULSE_SUPPORT_SIGMAS = 6.0
# transmit sensitivity below this weight is skipped entirely
TX_WEIGHT_CUTOFF = 1e-8


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian-enveloped carrier pulse.

    fractional_bandwidth is the -6 dB (half-magnitude) spectral width of
    the pulse divided by f_c.
    """

    f_c: float
    fractional_bandwidth: float = 0.6

    def __post_init__(self):
        if not (0.0 < self.fractional_bandwidth <= 1.0):
            raise ValueError("fractional bandwidth must be in (0, 1]")
        if self.f_c <= 0:
            raise ValueError("carrier frequency must be positive")

    @property
    def sigma(self):
        return pulse_sigma(self.f_c, self.fractional_bandwidth)


def pulse_sigma(f_c, fractional_bandwidth):
    """Envelope std so the -6 dB spectral width equals bw * f_c.

    The Gaussian envelope exp(-t^2 / 2 sigma^2) has magnitude spectrum
    exp(-2 pi^2 f^2 sigma^2) around the carrier; half-magnitude at
    +-bw*f_c/2 gives sigma = sqrt(2 ln 2) / (pi bw f_c).
    """
    return math.sqrt(2.0 * math.log(2.0)) / (math.pi * fractional_bandwidth * f_c)


def pulse_waveform(spec, t):
    """g(t) = exp(-t^2 / 2 sigma^2) cos(2 pi f_c t); g(0) = 1."""
    t = np.asarray(t, dtype=float)
    s = spec.sigma
    return np.exp(-(t * t) / (2.0 * s * s)) * np.cos(2.0 * np.pi * spec.f_c * t)


@dataclass(frozen=True)
class Phantom:
    """Point scatterers given as (depth r, direction theta_s, amplitude)."""

    r: np.ndarray = field(repr=False)
    theta_s: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)
    description: str = ""

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        th = np.atleast_1d(np.asarray(self.theta_s, dtype=float))
        a = np.atleast_1d(np.asarray(self.amplitude, dtype=float))
        if not (len(r) == len(th) == len(a)):
            raise ValueError("scatterer arrays must have equal length")
        if len(r) and np.any(r <= 0):
            raise ValueError("scatterer depths must be positive")
        if len(a) and not np.all(np.isfinite(a)):
            raise ValueError("scatterer amplitudes must be finite")
        for name, arr in (("r", r), ("theta_s", th), ("amplitude", a)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.r)


@dataclass(frozen=True)
class SectorRegion:
    """Annular sector r in [r_min, r_max], theta in [theta_min, theta_max]."""

    r_min: float
    r_max: float
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if not (self.theta_min < self.theta_max):
            raise ValueError("need theta_min < theta_max")

    @property
    def area(self):
        """Sector area in m^2: (r_max^2 - r_min^2) (theta_max - theta_min) / 2."""
        return 0.5 * (self.r_max**2 - self.r_min**2) * (self.theta_max - self.theta_min)

    def contains(self, r, theta):
        return (self.r_min <= r <= self.r_max) and (self.theta_min <= theta <= self.theta_max)


def point_grid_phantom(depths, angles, amplitude=1.0):
    """Cartesian product of depths and directions, all at one amplitude."""
    depths = np.atleast_1d(np.asarray(depths, dtype=float))
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if depths.size == 0 or angles.size == 0:
        raise ValueError("depths and angles must be non-empty")
    rr, tt = np.meshgrid(depths, angles, indexing="ij")
    n = rr.size
    return Phantom(rr.ravel(), tt.ravel(), np.full(n, float(amplitude)), description="point grid")


def anechoic_cyst_phantom(region, cyst_center, cyst_radius, density, seed):
    """Uniform random speckle over a sector with a scatterer-free disk.

    density is scatterers per cm^2; the realized count is Poisson with
    mean density*area before the cyst cut.  Amplitudes are standard
    normal (diffuse scattering).  Deterministic for a fixed seed.
    """
    r_c, th_c = cyst_center
    if not region.contains(r_c, th_c):
        raise ValueError("cyst center lies outside the sector region")
    rng = np.random.default_rng(seed)
    area_cm2 = region.area * 1e4
    n = rng.poisson(density * area_cm2)
    if n == 0:
        return Phantom(np.empty(0), np.empty(0), np.empty(0), description="anechoic cyst")
    # uniform over area: pdf(r) ~ r within the annulus
    u = rng.random(n)
    r = np.sqrt(region.r_min**2 + u * (region.r_max**2 - region.r_min**2))
    th = rng.uniform(region.theta_min, region.theta_max, n)
    amp = rng.standard_normal(n)
    # polar -> Cartesian (x lateral, z axial) for the disk cut
    x, z = r * np.sin(th), r * np.cos(th)
    xc, zc = r_c * np.sin(th_c), r_c * np.cos(th_c)
    keep = np.hypot(x - xc, z - zc) > cyst_radius
    return Phantom(r[keep], th[keep], amp[keep], description="anechoic cyst")


def tx_weight(theta, theta_s, sigma_theta):
    """Gaussian transmit angular sensitivity exp(-(theta-theta_s)^2 / 2 s^2)."""
    d = np.asarray(theta, dtype=float) - np.asarray(theta_s, dtype=float)
    return np.exp(-(d * d) / (2.0 * sigma_theta**2))


def simulate_rf(
    phantom,
    geometry,
    config,
    pulse=None,
    snr_db=None,
    seed=0,
    sigma_theta_deg=1.5,
):
    """Simulate an RF channel-data cube [n_angles x M x N].

    For each transmit angle theta and scatterer (r, theta_s, a), the echo
    reaches element m at t_rx = r/c + d_m(r/c; theta_s)/c and contributes
    a * w_tx(theta, theta_s) * (R0/r) * g(t - t_rx).  White Gaussian
    noise at ``snr_db`` relative to the frame RMS is added when
    requested.  Deterministic for a fixed seed.
    """
    from .core import RFFrame

    if pulse is None:
        pulse = PulseSpec(config.f_c)
    depth_lim = config.depth_max
    if len(phantom) and np.any(phantom.r > depth_lim):
        bad = np.flatnonzero(phantom.r > depth_lim)
        raise ValueError(
            f"{len(bad)} scatterer(s) beyond the imaging depth "
            f"{depth_lim * 1e3:.1f} mm (first at {phantom.r[bad[0]] * 1e3:.1f} mm)"
        )

    M, N = geometry.M, config.N
    data = np.zeros((config.n_angles, M, N))
    sig_th = math.radians(sigma_theta_deg)
    half = PULSE_SUPPORT_SIGMAS * pulse.sigma
    t_axis = config.times

    for ia, theta in enumerate(config.angles):
        if len(phantom) == 0:
            continue
        w = tx_weight(theta, phantom.theta_s, sig_th)
        sel = np.flatnonzero(w > TX_WEIGHT_CUTOFF)
        for s in sel:
            r = phantom.r[s]
            tp = r / config.c
            t_rx = tp + distance_dm(tp, phantom.theta_s[s], geometry.delta, config.c) / config.c
            gain = phantom.amplitude[s] * w[s] * (R0 / r)
            j0 = np.floor((t_rx - half) * config.f_s).astype(int)
            width = int(math.ceil(2 * half * config.f_s)) + 2
            cols = j0[:, None] + np.arange(width)[None, :]
            ok = (cols >= 0) & (cols < N)
            colsc = np.clip(cols, 0, N - 1)
            vals = gain * pulse_waveform(pulse, t_axis[colsc] - t_rx[:, None]) * ok
            rows = np.broadcast_to(np.arange(M)[:, None], cols.shape)
            np.add.at(data[ia], (rows.ravel(), colsc.ravel()), vals.ravel())

    if snr_db is not None:
        rms = math.sqrt(float(np.mean(data**2)))
        if rms > 0:
            sigma_n = rms * 10.0 ** (-snr_db / 20.0)
            rng = np.random.default_rng(seed)
            data = data + rng.normal(0.0, sigma_n, data.shape)

    return RFFrame(data=data, geometry=geometry, config=config)
