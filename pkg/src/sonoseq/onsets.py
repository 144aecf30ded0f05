"""Onset detection on mono audio.

The detection function measures, per frame, the Euclidean distance
between the observed complex spectrum and a prediction built from the
previous frame's magnitudes with linearly extrapolated phase. Adaptive
median thresholding and a windowed rectifier turn that series into a
sparse list of onset times.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.io.wavfile
import scipy.signal

__all__ = [
    "read_wav",
    "write_wav",
    "stft",
    "princarg",
    "detection_function",
    "adaptive_threshold",
    "pick_onsets",
    "detect_onsets",
    "write_onsets_csv",
    "read_onsets_csv",
]


def read_wav(path):
    """Load a WAV file as ``(samples, sample_rate)`` with samples in
    [-1, 1]. 16-bit integer and 32/64-bit float files are supported;
    multichannel input is mixed down by averaging."""
    rate, data = scipy.io.wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    return samples, rate


def write_wav(path, samples, sample_rate):
    scipy.io.wavfile.write(path, sample_rate,
                           np.asarray(samples, dtype=np.float32))


def stft(samples, window_size=1024, hop=128):
    """Hann-windowed one-sided short-time Fourier transform.

    Returns a complex array of shape ``(n_frames, window_size // 2 + 1)``
    where frame ``l`` covers samples ``[l * hop, l * hop + window_size)``.
    Magnitudes are normalized by the window's coherent gain so a
    full-scale sinusoid peaks near 0.5 regardless of window size; the
    silence threshold downstream relies on this scale. Audio shorter
    than one window yields zero frames.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if window_size < 1 or hop < 1 or hop > window_size:
        raise ValueError("need window_size >= hop >= 1")
    if samples.size == 0:
        raise ValueError("audio is empty")
    if not np.all(np.isfinite(samples)):
        raise ValueError("audio must be finite")
    n_frames = (samples.size - window_size) // hop + 1
    if n_frames <= 0:
        return np.zeros((0, window_size // 2 + 1), dtype=complex)
    window = scipy.signal.get_window("hann", window_size, fftbins=True)
    window = window / window.sum()
    idx = np.arange(window_size)[None, :] + hop * np.arange(n_frames)[:, None]
    return np.fft.rfft(samples[idx] * window, axis=1)


def princarg(phi):
    """Map phase angles to the principal range (-pi, pi]."""
    phi = np.asarray(phi, dtype=np.float64)
    wrapped = np.mod(phi, 2.0 * np.pi)
    out = np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)
    if out.ndim == 0:
        return float(out)
    return out


def detection_function(frames, smoothing_length=33):
    """Per-frame onset detection values from complex spectra.

    For each frame the predicted spectrum takes the previous frame's
    magnitudes and linearly extrapolates the unwrapped phase of the two
    preceding frames; the summed bin-wise distances are then averaged
    over a window of frames centered on each position (out-of-range
    frames contribute zero). The first two frames, lacking history,
    predict themselves exactly.
    """
    m = smoothing_length
    if m < 1 or m % 2 == 0:
        raise ValueError("smoothing_length must be odd and >= 1")
    frames = np.asarray(frames)
    if frames.shape[0] < 3:
        raise ValueError("need at least 3 frames for phase extrapolation")
    mags = np.abs(frames)
    phases = np.unwrap(np.angle(frames), axis=0)
    predicted_phase = 2.0 * phases[1:-1] - phases[:-2]
    predicted = mags[1:-1] * np.exp(1j * predicted_phase)
    distances = np.zeros(frames.shape[0])
    distances[2:] = np.abs(frames[2:] - predicted).sum(axis=1)
    lo = math.ceil(-m / 2)
    hi = math.floor(m / 2)
    kernel = np.ones(hi - lo + 1)
    eta = np.convolve(distances, kernel, mode="full") / m
    # full convolution index k corresponds to eta(l) at k = l + hi
    start = hi
    return eta[start:start + frames.shape[0]]


def adaptive_threshold(eta, sensitivity=0.9, lookahead=10):
    """Scaled median of the detection values over a look-ahead window.

    ``theta(l)`` is the median of ``eta[l : l + lookahead + 1]``
    (truncated at the stream end) scaled by ``sensitivity``.
    """
    if not 0.0 <= sensitivity <= 1.0:
        raise ValueError("sensitivity must be in [0, 1]")
    if lookahead < 0:
        raise ValueError("lookahead must be >= 0")
    eta = np.asarray(eta, dtype=np.float64)
    n = eta.size
    theta = np.empty(n)
    for l in range(n):
        theta[l] = np.median(eta[l:min(l + lookahead + 1, n)])
    return sensitivity * theta


def pick_onsets(eta, theta, peak_window=11, silence_threshold=0.002,
                hop_seconds=128 / 44100, time_offset=0.0):
    """Frame times of strict local maxima of the rectified, windowed
    detection excess.

    The thresholded excess ``max(eta - theta, 0)`` is summed over a
    window of ``peak_window + 1`` frames around each position, a silence
    threshold is subtracted and clipped at zero, and the local maxima of
    the result are reported (the first frame of any plateau). Silent
    input yields an empty list.
    """
    w = peak_window
    if w < 1 or w % 2 == 0:
        raise ValueError("peak_window must be odd and positive")
    eta = np.asarray(eta, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    excess = np.maximum(eta - theta, 0.0)
    lo = math.ceil(-w / 2)
    hi = math.ceil(w / 2)
    kernel = np.ones(hi - lo + 1)
    mu_full = np.convolve(excess, kernel, mode="full")
    mu = mu_full[hi:hi + eta.size]
    mu_s = np.maximum(mu - silence_threshold, 0.0)
    times = []
    n = mu_s.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and mu_s[j + 1] == mu_s[i]:
            j += 1
        left = mu_s[i - 1] if i > 0 else -np.inf
        right = mu_s[j + 1] if j + 1 < n else -np.inf
        if mu_s[i] > 0.0 and mu_s[i] > left and mu_s[i] > right:
            times.append(time_offset + i * hop_seconds)
        i = j + 1
    return times


def detect_onsets(samples, sample_rate=44100, window_size=1024, hop=128,
                  smoothing_length=33, sensitivity=0.9, lookahead=10,
                  peak_window=11, silence_threshold=0.002):
    """Full onset detection chain; returns onset times in seconds.

    Reported times are frame starts (``l * hop / sample_rate``): the
    smoothing and look-ahead stages already delay the detected peak past
    the physical attack, so the frame-start convention keeps reported
    times closest to it.
    """
    frames = stft(samples, window_size, hop)
    if frames.shape[0] < 3:
        return []
    eta = detection_function(frames, smoothing_length)
    theta = adaptive_threshold(eta, sensitivity, lookahead)
    return pick_onsets(eta, theta, peak_window, silence_threshold,
                       hop_seconds=hop / sample_rate, time_offset=0.0)


def write_onsets_csv(times, path):
    """One onset time per line, six decimal places."""
    with open(path, "w") as fh:
        for t in times:
            fh.write(f"{t:.6f}\n")


def read_onsets_csv(path):
    with open(path) as fh:
        return [float(line) for line in fh if line.strip()]
