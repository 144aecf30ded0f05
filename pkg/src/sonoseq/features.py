"""Timbre descriptors: 13 mel cepstrum coefficients per frame, then a
temporal cosine transform across the frames following an onset. Keeping
the first 4 temporal coefficients of each cepstral coefficient gives a
52-dimensional vector describing both the spectral shape of an event
and its initial temporal development."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft

from .onsets import stft

__all__ = [
    "mel_filterbank",
    "mfcc_frames",
    "timbre_descriptor",
    "ioi_feature",
    "descriptor_header",
    "write_descriptors_csv",
]

N_MFCC = 13
N_TEMPORAL = 4
LOG_FLOOR = 1e-10


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_filterbank(n_mels, n_bins, sample_rate, fmin=20.0, fmax=None):
    """Triangular mel filterbank over one-sided FFT bins.

    Returns an ``(n_mels, n_bins)`` weight matrix. Filters span
    ``fmin``..``fmax`` (default Nyquist) with peaks equally spaced on
    the mel scale.
    """
    if fmax is None:
        fmax = sample_rate / 2.0
    edges_hz = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax),
                                      n_mels + 2))
    freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    bank = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, mid, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - freqs) / max(hi - mid, 1e-12)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
        total = bank[m].sum()
        if total > 0:
            bank[m] /= total  # unit-area filters: flat in -> flat out
    return bank


@lru_cache(maxsize=8)
def _cached_bank(n_mels, n_bins, sample_rate):
    bank = mel_filterbank(n_mels, n_bins, sample_rate)
    bank.setflags(write=False)
    return bank


def mfcc_frames(frames, sample_rate, n_mels=40, n_coeffs=N_MFCC, bank=None):
    """First ``n_coeffs`` mel cepstrum coefficients of each spectral frame.

    Filterbank energies from the power spectrum are floored, logged, and
    decorrelated with an orthonormal DCT-II. Returns an array of shape
    ``(n_frames, n_coeffs)``.
    """
    frames = np.atleast_2d(np.asarray(frames))
    power = np.abs(frames) ** 2
    if bank is None:
        bank = _cached_bank(n_mels, power.shape[1], sample_rate)
    energies = power @ bank.T
    log_energies = np.log(np.maximum(energies, LOG_FLOOR))
    return scipy.fft.dct(log_energies, type=2, norm="ortho",
                         axis=1)[:, :n_coeffs]


def timbre_descriptor(samples, sample_rate, onset, window_ms=150.0,
                      window_size=1024, hop=128, n_mels=40, bank=None):
    """52-dimensional timbre vector of the audio following one onset.

    Frames the window ``[onset, onset + window_ms)`` with the same
    window/hop as onset analysis (zero-padding past the end of the
    audio), computes 13 mel cepstrum coefficients per frame, then an
    orthonormal DCT-II over each coefficient's time series, keeping 4
    temporal coefficients. Element ``4 * m + d`` is temporal coefficient
    ``d`` of cepstral coefficient ``m``.
    """
    samples = np.asarray(samples, dtype=np.float64)
    start = int(round(onset * sample_rate))
    if not 0 <= start < samples.size:
        raise ValueError("onset outside the audio")
    length = int(round(window_ms / 1000.0 * sample_rate))
    if length <= 0:
        raise ValueError("window_ms must be positive")
    segment = samples[start:start + length]
    need = max(length, window_size)
    if segment.size < need:
        segment = np.pad(segment, (0, need - segment.size))
    frames = stft(segment, window_size, hop)
    coeffs = mfcc_frames(frames, sample_rate, n_mels, bank=bank)
    if coeffs.shape[0] < N_TEMPORAL:
        coeffs = np.pad(coeffs, ((0, N_TEMPORAL - coeffs.shape[0]), (0, 0)))
    temporal = scipy.fft.dct(coeffs, type=2, norm="ortho",
                             axis=0)[:N_TEMPORAL]
    return temporal.T.reshape(-1)


def ioi_feature(onsets, index):
    """Interval in seconds between onset ``index`` and its predecessor."""
    if index < 1:
        raise ValueError("the first onset has no predecessor")
    if index >= len(onsets):
        raise ValueError("index out of range")
    return float(onsets[index] - onsets[index - 1])


def descriptor_header():
    return [f"mfcc{m}_dct{d}" for m in range(N_MFCC) for d in range(N_TEMPORAL)]


def write_descriptors_csv(descriptors, path):
    """One row per event, 52 columns, named header."""
    with open(path, "w") as fh:
        fh.write(",".join(descriptor_header()) + "\n")
        for vec in descriptors:
            fh.write(",".join(f"{v:.9g}" for v in vec) + "\n")
