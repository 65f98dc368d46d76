"""Sub-sampling schemes and assembly of degraded training data.

A scheme pairs a retained Fourier-coefficient count (temporal
sub-sampling) with a kept-element set (spatial sub-sampling).  The
reference schemes keep the reduction ratios of the 10.9 MHz / 1918
sample configuration: x5 keeps 400 of 959 positive-frequency bins
(about a fifth of the stored values), x9 keeps 220, and x11 combines x5
with a 27-of-64 sparse aperture.

``make_degraded_channels`` runs every channel through
spectra -> band selection -> frequency-domain alignment -> inverse
transform, producing the time-aligned but degraded cube the network
trains on; ``slice_cubes`` pairs 3-consecutive-angle blocks with their
middle-angle MV target.
"""

from dataclasses import dataclass, field

import numpy as np

from .beamform_fourier import (
    degraded_reconstruct,
    dft_coeffs,
    fd_time_align,
    subnyquist_select,
)
from .simulate import PulseSpec

__all__ = [
    "SamplingScheme",
    "TrainingSample",
    "Dataset",
    "scheme_full",
    "scheme_x5",
    "scheme_x9",
    "scheme_x11",
    "scheme_by_label",
    "default_sparse_pattern",
    "spatial_subsample",
    "make_degraded_channels",
    "slice_cubes",
    "normalize_dataset",
    "denormalize",
]

# retained fraction of the positive-frequency band in the reference setup
_X5_RATIO = 400 / 1918
_X9_RATIO = 220 / 1918


@dataclass(frozen=True)
class SamplingScheme:
    """temporal_K kept coefficients + kept_elements receive subset."""

    label: str
    temporal_K: int
    kept_elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        kept = np.unique(np.asarray(self.kept_elements, dtype=np.int64))
        if len(kept) == 0:
            raise ValueError("kept element set must be non-empty")
        kept.setflags(write=False)
        object.__setattr__(self, "kept_elements", kept)

    def reduction_factor(self, N, M):
        """Stored values of the full frame divided by this scheme's:
        (N / temporal_K) * (M / kept element count)."""
        return (N / self.temporal_K) * (M / len(self.kept_elements))

    def is_spatial(self, M):
        return len(self.kept_elements) < M


def scheme_full(config, geometry):
    return SamplingScheme(
        label="full",
        temporal_K=config.N // 2 + 1,
        kept_elements=np.arange(geometry.M),
    )


def scheme_x5(config, geometry):
    """Temporal 5-fold reduction (400 bins at N=1918)."""
    return SamplingScheme(
        label="x5",
        temporal_K=int(round(config.N * _X5_RATIO)),
        kept_elements=np.arange(geometry.M),
    )


def scheme_x9(config, geometry):
    """Temporal 9-fold reduction (220 bins at N=1918)."""
    return SamplingScheme(
        label="x9",
        temporal_K=int(round(config.N * _X9_RATIO)),
        kept_elements=np.arange(geometry.M),
    )


def scheme_x11(config, geometry):
    """x5 temporal reduction plus the 27-of-64 sparse aperture."""
    return SamplingScheme(
        label="x11",
        temporal_K=int(round(config.N * _X5_RATIO)),
        kept_elements=default_sparse_pattern(geometry.M),
    )


def scheme_by_label(label, config, geometry):
    try:
        factory = {
            "full": scheme_full,
            "x5": scheme_x5,
            "x9": scheme_x9,
            "x11": scheme_x11,
        }[label]
    except KeyError:
        raise ValueError(f"unknown scheme label {label!r}") from None
    return factory(config, geometry)


def default_sparse_pattern(M=64):
    """27-element receive pattern: dense flanks, sparse core.

    Keeps elements 0..7 and 56..63 plus every 4th element of the core.
    A perfectly reflection-symmetric 27-subset of 0..63 cannot exist
    (odd cardinality, no fixed point under m -> 63-m); the pattern is
    symmetric except for the unpaired core element 31.
    """
    if M != 64:
        raise ValueError("the default sparse pattern is defined for M = 64")
    flanks = list(range(0, 8)) + list(range(56, 64))
    core = [11, 15, 19, 23, 27, 31, 36, 40, 44, 48, 52]
    return np.array(sorted(flanks + core), dtype=np.int64)


def spatial_subsample(cube, kept_elements):
    """Zero-fill the channels of omitted elements (shape preserved).

    ``cube`` has elements on axis -2: either [M x N] or [angles x M x N].
    """
    kept = np.unique(np.asarray(kept_elements, dtype=np.int64))
    if len(kept) == 0:
        raise ValueError("kept element set must be non-empty")
    cube = np.asarray(cube, dtype=float)
    M = cube.shape[-2]
    if kept.min() < 0 or kept.max() >= M:
        raise ValueError("kept element indices out of range")
    mask = np.zeros(M, dtype=bool)
    mask[kept] = True
    out = cube.copy()
    out[..., ~mask, :] = 0.0
    return out


def make_degraded_channels(frame, scheme, qtables, pulse=None):
    """Degraded per-element reconstructions [n_angles x M x N].

    Per angle: spectra of the raw channels, contiguous band selection to
    ``scheme.temporal_K`` bins, frequency-domain alignment through the
    angle's Q table (no averaging), inverse transform back to length N,
    then zero-filling of omitted elements.

    ``qtables`` maps angle index -> QTable (or is a sequence in angle
    order).  Also returns the mean dropped-term fraction.
    """
    config = frame.config
    if pulse is None:
        pulse = PulseSpec(config.f_c)
    kc = config.N // 2 + 1
    out = np.empty_like(frame.data)
    dropped = []
    for ia in range(config.n_angles):
        try:
            qt = qtables[ia]
        except (KeyError, IndexError):
            raise ValueError(f"no Q table supplied for angle index {ia}") from None
        if qt is None:
            raise ValueError(f"no Q table supplied for angle index {ia}")
        spectra = dft_coeffs(frame.data[ia], config.f_s)
        if scheme.temporal_K < kc:
            spectra = subnyquist_select(spectra, scheme.temporal_K, pulse)
        aligned, frac = fd_time_align(spectra, qt)
        dropped.append(frac)
        out[ia] = degraded_reconstruct(aligned.coeffs, aligned.kept_indices, config.N)
    if scheme.is_spatial(frame.geometry.M):
        out = spatial_subsample(out, scheme.kept_elements)
    return out, float(np.mean(dropped))


@dataclass(frozen=True)
class TrainingSample:
    """Degraded 3-angle input cube plus the middle angle's MV target.

    input layout (default, "elements-d2"): [N x M x 3], channels are the
    three consecutive angles.  The permuted alternative ("angles-d2")
    stores [N x 3 x M].
    """

    input: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    angle_index: int

    def __post_init__(self):
        inp = np.asarray(self.input, dtype=float)
        tgt = np.asarray(self.target, dtype=float)
        if inp.ndim != 3:
            raise ValueError("sample input must be 3-D")
        if tgt.ndim != 1 or len(tgt) != inp.shape[0]:
            raise ValueError("target length must equal the input depth dimension")
        if not (np.all(np.isfinite(inp)) and np.all(np.isfinite(tgt))):
            raise ValueError("sample contains non-finite values")
        inp.setflags(write=False)
        tgt.setflags(write=False)
        object.__setattr__(self, "input", inp)
        object.__setattr__(self, "target", tgt)


@dataclass
class Dataset:
    """Training samples plus the normalization scale (1.0 = unnormalized)."""

    samples: list
    scale: float = 1.0
    layout: str = "elements-d2"

    def __len__(self):
        return len(self.samples)


def slice_cubes(degraded, targets, layout="elements-d2"):
    """One TrainingSample per interior angle.

    ``degraded`` is [n_angles x M x N]; ``targets`` holds one MV line
    per angle.  Sample a uses input angles {a-1, a, a+1} and the target
    at a; the first and last angles yield no sample.
    """
    if layout not in ("elements-d2", "angles-d2"):
        raise ValueError(f"unknown layout {layout!r}")
    degraded = np.asarray(degraded, dtype=float)
    n_angles = degraded.shape[0]
    if n_angles < 3:
        raise ValueError("need at least 3 angles to slice training cubes")
    if len(targets) != n_angles:
        raise ValueError("need one target per angle")
    samples = []
    for a in range(1, n_angles - 1):
        block = degraded[a - 1 : a + 2]  # [3 x M x N]
        if layout == "elements-d2":
            inp = block.transpose(2, 1, 0)  # [N x M x 3]
        else:
            inp = block.transpose(2, 0, 1)  # [N x 3 x M]
        tgt = targets[a]
        tgt = tgt.samples if hasattr(tgt, "samples") else np.asarray(tgt, dtype=float)
        samples.append(TrainingSample(input=inp, target=tgt, angle_index=a))
    return samples


def normalize_dataset(samples, layout="elements-d2"):
    """Scale inputs and targets by the dataset-wide max |target|.

    Returns a Dataset whose ``scale`` restores the original units
    (multiply by it to de-normalize).  Idempotent: normalizing an
    already-normalized dataset divides by 1.
    """
    if len(samples) == 0:
        raise ValueError("cannot normalize an empty dataset")
    scale = max(float(np.abs(s.target).max()) for s in samples)
    if scale == 0.0:
        raise ValueError("all-zero targets: nothing to normalize")
    normed = [
        TrainingSample(input=s.input / scale, target=s.target / scale, angle_index=s.angle_index)
        for s in samples
    ]
    return Dataset(samples=normed, scale=scale, layout=layout)


def denormalize(values, scale):
    """Undo dataset normalization on predictions or targets."""
    return np.asarray(values) * scale
