"""Frequency-domain beamforming via precomputed distortion-coefficient tables.

The time-alignment of one channel is a linear map (linear interpolation
onto the delayed grid, masked by the beam support), so it has an exact
frequency-domain representation: the aligned coefficients are

    c_hat_m[k] = sum_n c_m[k - n] * Q[k, m, n]      (indices mod N)

where Q[k, m, n] is row k of the operator's DFT-domain matrix.  The
construction here never materializes the N x N operator: writing the
interpolation index as j + drift_j with a bounded integer drift, the
whole matrix falls out of a single FFT of a phase table,

    Q[k, m, n] = Ghat_m[n mod N, (k - n) mod N] / 1,
    Ghat_m = FFT_j( valid_j * exp(2i pi kap drift_j / N)
                    * ((1 - w_j) + w_j exp(2i pi kap / N)) ) / N,

with columns kap = 0..N/2 only (the drift matrix is conjugate-symmetric
in kap).  Tables are truncated per row to the smallest centered offset
window holding ``energy_fraction`` of the row energy; with the fraction
at 1 the full matrix is kept and application reproduces time-domain
alignment to machine precision.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from numpy.lib.stride_tricks import sliding_window_view

from .beamform_time import interp_weights
from .core import BeamLine
from .util import snb_threads

__all__ = [
    "SpectrumSet",
    "BeamSpectrum",
    "QTable",
    "dft_coeffs",
    "build_q_table",
    "build_q_tables",
    "fd_time_align",
    "fd_beamform",
    "subnyquist_select",
    "degraded_reconstruct",
]


@dataclass(frozen=True)
class SpectrumSet:
    """Per-element Fourier coefficients c_m[k] over a kept index set.

    Convention: forward DFT carries the 1/N factor, the inverse is
    unnormalized.  kept_indices is sorted and lives in [0, N//2]
    (real signals; the negative half is implied by conjugation).
    """

    coeffs: np.ndarray = field(repr=False)
    kept_indices: np.ndarray = field(repr=False)
    N: int
    f_s: float

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        kept = np.asarray(self.kept_indices, dtype=np.int64)
        if coeffs.shape[1] != len(kept):
            raise ValueError("coefficient columns must match kept_indices")
        if len(kept) and (kept.min() < 0 or kept.max() > self.N // 2):
            raise ValueError("kept indices must lie in [0, N//2]")
        if len(kept) > 1 and not np.all(np.diff(kept) > 0):
            raise ValueError("kept indices must be sorted and unique")
        coeffs.setflags(write=False)
        kept.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kept_indices", kept)

    @property
    def M(self):
        return self.coeffs.shape[0]

    def full_vector(self, m):
        """Length-N spectrum of element m with conjugate symmetry imposed
        and zeros at indices outside the kept set."""
        full = np.zeros(self.N, dtype=complex)
        full[self.kept_indices] = self.coeffs[m]
        k = self.kept_indices
        interior = k[(k > 0) & (k != self.N - k)]
        pos = np.searchsorted(k, interior)
        full[self.N - interior] = np.conj(self.coeffs[m][pos])
        return full

    def resolvable_mask(self):
        """Boolean length-N mask of source indices obtainable from the
        kept set directly or through conjugate symmetry."""
        avail = np.zeros(self.N, dtype=bool)
        avail[self.kept_indices] = True
        avail[(self.N - self.kept_indices) % self.N] = True
        return avail


@dataclass(frozen=True)
class BeamSpectrum:
    """Beam Fourier coefficients over the kept index set."""

    coeffs: np.ndarray = field(repr=False)
    kept_indices: np.ndarray = field(repr=False)
    N: int
    theta: float
    t_b: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        kept = np.asarray(self.kept_indices, dtype=np.int64)
        coeffs.setflags(write=False)
        kept.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kept_indices", kept)


def dft_coeffs(frame_angle, f_s):
    """Full per-element spectra of one angle's channels [M x N]."""
    X = np.atleast_2d(np.asarray(frame_angle, dtype=float))
    N = X.shape[1]
    coeffs = sfft.rfft(X, axis=1) / N
    return SpectrumSet(coeffs=coeffs, kept_indices=np.arange(N // 2 + 1), N=N, f_s=f_s)


# --------------------------------------------------------------------------
# table construction
# --------------------------------------------------------------------------


@lru_cache(maxsize=4)
def _drift_phase_table(N, dmax):
    """W1[d + dmax, kap] = exp(2i pi kap d / N) for d in [-dmax, dmax]."""
    kc = N // 2 + 1
    d = np.arange(-dmax, dmax + 1)
    return np.exp(2j * np.pi * np.outer(d, np.arange(kc)) / N)


def _element_response_fft(geometry, config, theta, m):
    """Ghat for one element: FFT over time of the drift-phase matrix."""
    N = config.N
    kc = N // 2 + 1
    i0, w, valid = interp_weights(theta, geometry.delta[m], config)
    drift = i0 - np.arange(N)
    dmax = int(math.ceil(np.abs(geometry.delta).max() / config.c * config.f_s)) + 2
    drift = np.clip(drift, -dmax, dmax)  # invalid rows are zeroed below
    W1 = _drift_phase_table(N, dmax)
    G = W1[drift + dmax].copy()
    G *= ((1.0 - w) * valid)[:, None]
    G += W1[np.clip(drift + 1, -dmax, dmax) + dmax] * ((w * valid)[:, None])
    Ghat = sfft.fft(G, axis=0, overwrite_x=True, workers=snb_threads())
    Ghat *= 1.0 / N
    return Ghat


def _extract_full(Ghat, N):
    """Source-index-major blocks of the operator's DFT matrix.

    B1[k, kap] = Ghat[(k-kap) % N, kap]          kap in [0, N//2]
    B2[k, kap] = Ghat[(N-k-kap) % N, kap]   so   B[k, N-kap] = conj(B2[k, kap])
    """
    kc = N // 2 + 1
    aug = np.concatenate([Ghat, Ghat[:kc]], axis=0)
    sw = sliding_window_view(aug, kc, axis=0)  # [N+1, kc, kc] view
    kap = np.arange(kc)
    B1 = np.ascontiguousarray(sw[(N - kap) % N, kap, :].T)
    B2 = np.ascontiguousarray(sw[N - kap - (kc - 1), kap, :][:, ::-1].T)
    return B1, B2


def _extract_band(Ghat, N, H):
    """Offset-major band Q[k, n], n in [-H, H], k in [0, N//2]."""
    kc = N // 2 + 1
    k = np.arange(kc)[:, None]
    n = np.arange(-H, H + 1)[None, :]
    kmn = k - n
    conjsel = (kmn > N // 2) | (kmn < 0)
    rows_d = np.broadcast_to(n % N, kmn.shape)
    band = np.where(~conjsel, Ghat[rows_d, np.where(~conjsel, kmn, 0)], 0.0)
    rows_c = np.broadcast_to((-n) % N, kmn.shape)
    band = np.where(conjsel, np.conj(Ghat[rows_c, np.where(conjsel, (-kmn) % N, 0)]), band)
    return band


def _full_row_energy(B1, B2, N):
    kc = N // 2 + 1
    hi = N - kc  # B2 columns 1..hi map to distinct source indices
    e = (np.abs(B1) ** 2).sum(axis=1)
    if hi >= 1:
        e = e + (np.abs(B2[:, 1 : hi + 1]) ** 2).sum(axis=1)
    return e


def _centered_cumulative(band, H):
    """cum[k, h] = energy of band row k within offsets [-h, h]."""
    p = np.abs(band) ** 2
    cum = np.empty((band.shape[0], H + 1))
    cum[:, 0] = p[:, H]
    np.cumsum(p[:, H + 1 :] + p[:, H - 1 :: -1], axis=1, out=cum[:, 1:])
    cum[:, 1:] += cum[:, :1]
    return cum


def _row_windows(Ghat, N, energy_fraction, e_full, h_cap):
    """Smallest centered half-width per row reaching the energy target.

    Returns (h, retained, band) where band covers [-Hmax, Hmax] with
    Hmax = max(h).  Starts from a narrow candidate band and widens only
    the rows that have not reached their target.
    """
    kc = N // 2 + 1
    target = energy_fraction * e_full
    H = min(max(32, 1), h_cap)
    while True:
        band = _extract_band(Ghat, N, H)
        cum = _centered_cumulative(band, H)
        h = np.argmax(cum >= target[:, None], axis=1)
        unreached = cum[:, -1] < target
        if not np.any(unreached) or H >= h_cap:
            h[unreached] = h_cap
            retained = cum[np.arange(kc), np.minimum(h, H)]
            return h, retained, band
        H = min(H * 2, h_cap)


@dataclass(frozen=True)
class BandRows:
    """Per-row windows of one element's table, concatenated flat.

    Row k occupies values[rowptr[k]:rowptr[k+1]] for offsets
    n = -h[k]..h[k]; src holds the precomputed source indices
    (k - n) mod N in the same order.
    """

    values: np.ndarray
    src: np.ndarray
    rowptr: np.ndarray
    h: np.ndarray

    def row(self, k):
        sl = slice(self.rowptr[k], self.rowptr[k + 1])
        return np.arange(-self.h[k], self.h[k] + 1), self.values[sl]


def _band_rows(band, h, Hfrom, N):
    """Flatten per-row centered windows out of a [-Hfrom, Hfrom] band."""
    kc = band.shape[0]
    widths = 2 * h.astype(np.int64) + 1
    rowptr = np.zeros(kc + 1, dtype=np.int64)
    np.cumsum(widths, out=rowptr[1:])
    cols = (Hfrom - h[:, None]) + np.arange(2 * int(h.max()) + 1)[None, :]
    take = np.arange(2 * int(h.max()) + 1)[None, :] < widths[:, None]
    values = band[np.arange(kc)[:, None], np.minimum(cols, 2 * Hfrom)][take]
    k = np.arange(kc)[:, None]
    n = cols - Hfrom  # offset values per slot
    src = ((k - n) % N)[take].astype(np.int64)
    return BandRows(values=values, src=src, rowptr=rowptr, h=h.astype(np.int64))


@dataclass(frozen=True)
class QTable:
    """Distortion coefficients Q[k, m, n] for one steering angle.

    Two equivalent storage layouts:
      * ``band``: per element, the per-row windows n in [-h_m(k), h_m(k)]
        stored flat (:class:`BandRows`).
      * ``full`` (energy_fraction = 1): per element, source-index-major
        blocks (B1, B2); application is an exact matrix-vector product.
    ``coeff(k, m, n)`` reads either layout as Q[k, m, n].
    """

    theta: float
    N: int
    f_s: float
    energy_fraction: float
    mode: str
    elements: tuple = field(repr=False)
    halfwidths: tuple = field(repr=False)  # per element: h[k] array ('band') or None
    row_energy: np.ndarray = field(repr=False)  # [M, Kc]
    retained_energy: np.ndarray = field(repr=False)  # [M, Kc]
    key: str = ""

    @property
    def M(self):
        return len(self.elements)

    @property
    def kc(self):
        return self.N // 2 + 1

    @property
    def nu_halfwidth(self):
        """Per-k window half-width unioned across elements."""
        if self.mode == "full":
            return np.full(self.kc, self.N // 2, dtype=np.int64)
        return np.max(np.stack(self.halfwidths), axis=0)

    def coeff(self, k, m, n):
        """Q[k, m, n]; zero outside the stored window."""
        if self.mode == "full":
            B1, B2 = self.elements[m]
            kap = (k - n) % self.N
            if kap < self.kc:
                return complex(B1[k, kap])
            return complex(np.conj(B2[k, self.N - kap]))
        rows = self.elements[m]
        if abs(n) > rows.h[k]:
            return 0.0 + 0.0j
        return complex(rows.values[rows.rowptr[k] + rows.h[k] + n])

    def mirrored(self):
        """Table for -theta of a mirror-symmetric array: element order
        reversed, coefficients shared (tau(delta, -theta) = tau(-delta, theta))."""
        return QTable(
            theta=-self.theta,
            N=self.N,
            f_s=self.f_s,
            energy_fraction=self.energy_fraction,
            mode=self.mode,
            elements=tuple(reversed(self.elements)),
            halfwidths=tuple(reversed(self.halfwidths)),
            row_energy=self.row_energy[::-1],
            retained_energy=self.retained_energy[::-1],
            key=self.key,
        )


def build_q_tables(geometry, config, theta, energy_fractions, key=""):
    """Build tables for several energy fractions in one operator pass.

    Returns {fraction: QTable}.  The expensive part (the per-element FFT
    of the drift-phase matrix) is shared across fractions.
    """
    fractions = sorted(set(float(f) for f in energy_fractions))
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise ValueError(f"energy fraction must be in (0, 1], got {f}")
    N, M = config.N, geometry.M
    kc = N // 2 + 1
    h_cap = (N - 1) // 2

    per_frac = {f: {"el": [], "h": [], "ret": []} for f in fractions}
    row_energy = np.empty((M, kc))
    for m in range(M):
        Ghat = _element_response_fft(geometry, config, theta, m)
        B1, B2 = _extract_full(Ghat, N)
        e_full = _full_row_energy(B1, B2, N)
        row_energy[m] = e_full
        need_band = [f for f in fractions if f < 1.0]
        if need_band:
            h, _, band = _row_windows(Ghat, N, max(need_band), e_full, h_cap)
            Hfrom = (band.shape[1] - 1) // 2
            cum = _centered_cumulative(band, Hfrom)
            for f in need_band:
                hf = np.argmax(cum >= (f * e_full)[:, None], axis=1)
                hf[cum[:, -1] < f * e_full] = Hfrom
                per_frac[f]["el"].append(_band_rows(band, hf, Hfrom, N))
                per_frac[f]["h"].append(hf)
                per_frac[f]["ret"].append(cum[np.arange(kc), hf])
        for f in fractions:
            if f >= 1.0:
                per_frac[f]["el"].append((B1, B2))
                per_frac[f]["h"].append(None)
                per_frac[f]["ret"].append(e_full)

    out = {}
    for f in fractions:
        out[f] = QTable(
            theta=float(theta),
            N=N,
            f_s=config.f_s,
            energy_fraction=f,
            mode="full" if f >= 1.0 else "band",
            elements=tuple(per_frac[f]["el"]),
            halfwidths=tuple(per_frac[f]["h"]),
            row_energy=row_energy,
            retained_energy=np.stack(per_frac[f]["ret"]),
            key=key,
        )
    return out


def build_q_table(geometry, config, theta, energy_fraction=0.95, key=""):
    """Distortion-coefficient table for one angle (see module docstring)."""
    return build_q_tables(geometry, config, theta, [energy_fraction], key=key)[energy_fraction]


def build_angle_tables(geometry, config, energy_fraction=0.95, key=""):
    """Tables for every config angle, index -> QTable.

    For a mirror-symmetric array, tau(delta, -theta) = tau(-delta, theta),
    so the -theta table is the +theta table with elements reversed; each
    +-pair is built once and reflected.
    """
    tables = {}
    for ia, th in enumerate(config.angles):
        partner = [
            ib for ib in tables if th != 0.0 and abs(config.angles[ib] + th) < 1e-15
        ]
        if partner and geometry.is_mirror_symmetric:
            tables[ia] = tables[partner[0]].mirrored()
        else:
            tables[ia] = build_q_table(geometry, config, th, energy_fraction, key=key)
    return tables


# --------------------------------------------------------------------------
# application
# --------------------------------------------------------------------------


def fd_time_align(spectra, qtable):
    """Align per-element spectra in the frequency domain.

    Evaluates c_hat_m[k] = sum_{n in nu(k)} c_m[k-n] Q[k, m, n] for every
    kept beam index k.  Source indices missing from the kept set (and
    not recoverable by conjugate symmetry) contribute zero; the returned
    fraction counts such dropped window terms.

    Returns (aligned SpectrumSet, dropped_fraction).
    """
    if len(spectra.kept_indices) == 0:
        raise ValueError("spectrum kept set is empty")
    if spectra.N != qtable.N:
        raise ValueError("spectrum length does not match the table")
    N = spectra.N
    kept = spectra.kept_indices
    avail = spectra.resolvable_mask()
    out = np.zeros((spectra.M, len(kept)), dtype=complex)

    dropped = 0
    total = 0
    if qtable.mode == "full":
        kc = qtable.kc
        hi = N - kc
        for m in range(spectra.M):
            B1, B2 = qtable.elements[m]
            ch = np.zeros(kc, dtype=complex)
            ch[kept] = spectra.coeffs[m]
            ch2 = ch.copy()
            ch2[0] = 0.0
            if N % 2 == 0:
                ch2[-1] = 0.0
            out[m] = (B1 @ ch + np.conj(B2[:, : hi + 1] @ ch2[: hi + 1]))[kept]
        total = spectra.M * len(kept) * N
        dropped = spectra.M * len(kept) * int((~avail).sum())
    else:
        for m in range(spectra.M):
            rows = qtable.elements[m]
            cfull = spectra.full_vector(m)
            sums = np.add.reduceat(rows.values * cfull[rows.src], rows.rowptr[:-1])
            out[m] = sums[kept]
            widths = np.diff(rows.rowptr)
            miss = np.add.reduceat((~avail[rows.src]).astype(np.int64), rows.rowptr[:-1])
            total += int(widths[kept].sum())
            dropped += int(miss[kept].sum())

    aligned = SpectrumSet(coeffs=out, kept_indices=kept, N=N, f_s=spectra.f_s)
    return aligned, (dropped / total if total else 0.0)


def fd_beamform(aligned, theta=0.0, t_b=0.0):
    """Beam coefficients: the mean of the aligned element coefficients."""
    return BeamSpectrum(
        coeffs=aligned.coeffs.mean(axis=0),
        kept_indices=aligned.kept_indices,
        N=aligned.N,
        theta=float(theta),
        t_b=float(t_b),
    )


def subnyquist_select(spectra, K, pulse):
    """Retain K contiguous coefficients centered on the pulse's peak bin.

    The band is round(f_c N / f_s) +- K/2, clipped to [0, N//2]; asking
    for more than the available band keeps everything (with a warning).
    """
    kc = spectra.N // 2 + 1
    kept = spectra.kept_indices
    if K >= len(kept):
        if K > len(kept):
            warnings.warn(
                f"requested {K} coefficients but only {len(kept)} are available; keeping all",
                stacklevel=2,
            )
        return spectra
    k_peak = int(round(pulse.f_c * spectra.N / spectra.f_s))
    start = int(np.clip(k_peak - K // 2, 0, kc - K))
    sel = np.arange(start, start + K)
    pos = np.searchsorted(kept, sel)
    ok = (pos < len(kept)) & (kept[np.minimum(pos, len(kept) - 1)] == sel)
    pos = pos[ok]
    return SpectrumSet(
        coeffs=spectra.coeffs[:, pos],
        kept_indices=kept[pos],
        N=spectra.N,
        f_s=spectra.f_s,
    )


def degraded_reconstruct(coeffs, kept_indices, N):
    """Invert a partial spectrum back to a length-N real signal.

    Embeds the kept coefficients in a length-N vector, imposes conjugate
    symmetry X[N-k] = conj(X[k]) (forcing the self-conjugate bins 0 and
    N/2 real), and applies the unnormalized inverse DFT.  Accepts a
    coefficient vector or an [M x K] stack.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    kept = np.asarray(kept_indices, dtype=np.int64)
    one_d = coeffs.ndim == 1
    C = np.atleast_2d(coeffs)
    kc = N // 2 + 1
    half = np.zeros((C.shape[0], kc), dtype=complex)
    half[:, kept] = C
    half[:, 0] = half[:, 0].real
    if N % 2 == 0:
        half[:, -1] = half[:, -1].real
    x = sfft.irfft(half, n=N, axis=1) * N
    return x[0] if one_d else x


def fd_das_line(frame_angle, qtable, config, K=None, pulse=None):
    """Convenience: full FD pipeline for one angle -> BeamLine.

    dft_coeffs -> (optional sub-Nyquist selection) -> fd_time_align ->
    fd_beamform -> degraded_reconstruct.
    """
    spectra = dft_coeffs(frame_angle, config.f_s)
    if K is not None:
        if pulse is None:
            from .simulate import PulseSpec

            pulse = PulseSpec(config.f_c)
        spectra = subnyquist_select(spectra, K, pulse)
    aligned, _ = fd_time_align(spectra, qtable)
    beam = fd_beamform(aligned, theta=qtable.theta)
    samples = degraded_reconstruct(beam.coeffs, beam.kept_indices, beam.N)
    return BeamLine(samples=samples, theta=qtable.theta)
