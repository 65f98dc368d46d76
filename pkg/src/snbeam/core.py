"""Array geometry, acquisition configuration and the shared delay formulas.

Everything downstream (time- and frequency-domain beamforming, the
simulator, the degraded-data pipeline) builds on the two-way propagation
model defined here: a pulse transmitted at t=0 along direction ``theta``
reaches depth ``c*t`` at time ``t``; the echo scattered there arrives at
element m after travelling ``d_m(t; theta)`` further.  All quantities are
SI (meters, seconds, Hz, radians).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayGeometry",
    "AcquisitionConfig",
    "RFFrame",
    "BeamLine",
    "element_positions",
    "distance_dm",
    "delay_tau",
    "default_geometry",
    "default_config",
    "symmetric_angles",
]


def element_positions(M, pitch):
    """Signed element offsets of a centered uniform linear array.

    delta_m = (m - (M-1)/2) * pitch for m = 0..M-1, so the array is
    symmetric about the origin element (fractional center for even M).
    """
    if M < 1:
        raise ValueError(f"element count must be >= 1, got {M}")
    if pitch <= 0:
        raise ValueError(f"pitch must be positive, got {pitch}")
    return (np.arange(M) - (M - 1) / 2.0) * float(pitch)


def distance_dm(t, theta, delta_m, c):
    """Distance from the pulse position at time t to element m.

    d_m = sqrt((c t cos(theta))^2 + (delta_m - c t sin(theta))^2).
    Broadcasts over any mix of scalar/array arguments.
    """
    ct = c * np.asarray(t, dtype=float)
    return np.hypot(ct * np.cos(theta), np.asarray(delta_m, dtype=float) - ct * np.sin(theta))


def delay_tau(t, theta, delta_m, c):
    """Receive time at element m that aligns with beam time t.

    tau_m(t; theta) = (t + sqrt(t^2 - 4 g t sin(theta) + 4 g^2)) / 2 with
    g = delta_m / c.  The discriminant equals (t - 2 g sin(theta))^2 +
    (2 g cos(theta))^2, so the square root is always real.  tau is the
    identity for the origin element (g = 0).
    """
    t = np.asarray(t, dtype=float)
    g = np.asarray(delta_m, dtype=float) / c
    disc = t * t - 4.0 * g * t * np.sin(theta) + 4.0 * g * g
    return 0.5 * (t + np.sqrt(disc))


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear phased array along the x-axis.

    delta holds the signed per-element offsets from the origin element;
    it is strictly increasing and (for the centered layout built by
    :func:`element_positions`) sums to zero.
    """

    M: int
    pitch: float
    delta: np.ndarray = field(repr=False)

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if len(delta) != self.M:
            raise ValueError(f"delta has length {len(delta)}, expected M={self.M}")
        if self.M > 1 and not np.all(np.diff(delta) > 0):
            raise ValueError("element offsets must be strictly increasing")

    @classmethod
    def centered(cls, M, pitch):
        return cls(M=M, pitch=float(pitch), delta=element_positions(M, pitch))

    @property
    def is_mirror_symmetric(self):
        """True when delta reversed-and-negated equals delta (centered layout)."""
        return bool(np.allclose(self.delta, -self.delta[::-1], atol=1e-15))


@dataclass(frozen=True)
class AcquisitionConfig:
    """Acquisition timing and steering set.

    T = N / f_s is the line duration; T_B(theta) <= T restricts the beam
    support per angle (defaults to T for every angle).
    """

    c: float
    f_c: float
    f_s: float
    N: int
    angles: np.ndarray = field(repr=False)
    T_B: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.f_s <= 0 or self.f_c <= 0 or self.c <= 0:
            raise ValueError("c, f_c and f_s must be positive")
        if self.T_B is None:
            tb = np.full(len(angles), self.T)
        else:
            tb = np.broadcast_to(np.asarray(self.T_B, dtype=float), (len(angles),)).copy()
        if np.any(tb > self.T + 1e-15):
            raise ValueError("T_B(theta) must not exceed the line duration T")
        tb.setflags(write=False)
        object.__setattr__(self, "T_B", tb)

    @property
    def T(self):
        return self.N / self.f_s

    @property
    def n_angles(self):
        return len(self.angles)

    @property
    def times(self):
        """Sample instants t_j = j / f_s, length N."""
        return np.arange(self.N) / self.f_s

    @property
    def depth_max(self):
        """Maximum two-way imaging depth c*T/2."""
        return self.c * self.T / 2.0

    def beam_support(self, angle_index):
        return float(self.T_B[angle_index])


@dataclass(frozen=True)
class RFFrame:
    """Real channel-data cube [n_angles x M x N] plus its configuration."""

    data: np.ndarray = field(repr=False)
    geometry: ArrayGeometry
    config: AcquisitionConfig

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        expected = (self.config.n_angles, self.geometry.M, self.config.N)
        if data.shape != expected:
            raise ValueError(f"frame shape {data.shape} does not match config {expected}")
        if not np.all(np.isfinite(data)):
            raise ValueError("frame contains non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class BeamLine:
    """One beamformed line: N real samples steered along ``theta``."""

    samples: np.ndarray = field(repr=False)
    theta: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(samples)):
            raise ValueError("beam line contains non-finite values")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)


def default_geometry():
    """64-element array at half-wavelength pitch for the default config."""
    cfg = _DEFAULTS
    pitch = cfg["c"] / (2.0 * cfg["f_c"])
    return ArrayGeometry.centered(64, pitch)


def symmetric_angles(n_angles, span_deg):
    """Uniform steering set over +-span_deg/2, exactly antisymmetric
    (angles[i] == -angles[-1-i] bitwise) so mirrored-angle identities
    hold to the last ulp."""
    if n_angles < 2:
        return np.array([0.0])
    half = np.radians(span_deg / 2.0)
    a = np.linspace(-half, half, n_angles)
    return (a - a[::-1]) / 2.0


def default_config(n_angles=65, span_deg=80.0, N=None, f_s=None):
    """P4-2v-like acquisition: f_c 2.7 MHz, f_s 10.9 MHz, 1918 samples/line.

    Angles span +-span_deg/2 uniformly (65 lines over +-40 degrees by
    default; the frame line count is configurable).
    """
    return AcquisitionConfig(
        c=_DEFAULTS["c"],
        f_c=_DEFAULTS["f_c"],
        f_s=f_s if f_s is not None else _DEFAULTS["f_s"],
        N=N if N is not None else _DEFAULTS["N"],
        angles=symmetric_angles(n_angles, span_deg),
    )


_DEFAULTS = {"c": 1540.0, "f_c": 2.7e6, "f_s": 10.9e6, "N": 1918}
