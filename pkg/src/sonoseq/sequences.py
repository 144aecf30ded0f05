"""Synthetic evaluation inputs: repetitive symbol sequences built from
set partitions, skip/switch noise transforms, and labeled audio tracks
rendered from a small bank of synthetic timbres."""

from __future__ import annotations

import numpy as np

__all__ = [
    "bell_number",
    "enumerate_set_partitions",
    "generate_sequence",
    "apply_skip_noise",
    "apply_switch_noise",
    "ioi_ramp",
    "render_timbre",
    "synthesize_labeled_audio",
    "crossfade_pair_track",
    "BUILTIN_TIMBRES",
]

MAX_PARTITION_SIZE = 6


def bell_number(n):
    """Number of set partitions of an n-element set."""
    if n < 0:
        raise ValueError("n must be non-negative")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def enumerate_set_partitions(n):
    """All set partitions of positions {1..n}, blocks sorted by minimum.

    Partitions are emitted in restricted-growth order (element k joins an
    existing block or opens a new one), which already yields blocks in
    order of their minimal element. Guarded to n <= 6: the experiment
    grids never need more and Bell numbers explode beyond that.
    """
    if not 1 <= n <= MAX_PARTITION_SIZE:
        raise ValueError(f"n must be in 1..{MAX_PARTITION_SIZE}, got {n}")
    results = []

    def extend(element, blocks):
        if element > n:
            results.append(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(element)
            extend(element + 1, blocks)
            b.pop()
        blocks.append([element])
        extend(element + 1, blocks)
        blocks.pop()

    extend(1, [])
    return results


def generate_sequence(partition, repetitions=20):
    """Repeat the base pattern encoded by a set partition of positions.

    Positions in block ``i`` carry symbol ``i`` (0-based); the length of
    the base pattern is the number of positions covered. The pattern is
    concatenated ``repetitions`` times.
    """
    positions = sorted(p for block in partition for p in block)
    n = len(positions)
    if positions != list(range(1, n + 1)):
        raise ValueError("partition must cover positions 1..n exactly once")
    base = [0] * n
    for sym, block in enumerate(partition):
        for p in block:
            base[p - 1] = sym
    return base * repetitions


def apply_skip_noise(seq, p_skip, rng):
    """Delete each symbol independently with probability ``p_skip``."""
    if not 0.0 <= p_skip <= 0.95:
        raise ValueError("p_skip must be in [0, 0.95]")
    keep = rng.random(len(seq)) >= p_skip
    return [s for s, k in zip(seq, keep) if k]


def apply_switch_noise(seq, p_switch, n_symbols, rng):
    """Replace each symbol, with probability ``p_switch``, by a uniform
    draw over ``n_symbols`` alternatives (the draw may repeat the
    original symbol)."""
    if not 0.0 <= p_switch <= 0.95:
        raise ValueError("p_switch must be in [0, 0.95]")
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    flips = rng.random(len(seq)) < p_switch
    draws = rng.integers(0, n_symbols, size=len(seq))
    return [int(d) if f else s for s, f, d in zip(seq, flips, draws)]


def ioi_ramp(start_ioi, end_ioi, n_events, t0=0.5):
    """Event times with inter-onset intervals ramping linearly."""
    iois = np.linspace(start_ioi, end_ioi, max(n_events - 1, 1))
    times = np.concatenate([[t0], t0 + np.cumsum(iois[: n_events - 1])])
    return times[:n_events]


def _attack_envelope(n, fs, attack_ms=10.0, decay=18.0, fade_ms=25.0):
    t = np.arange(n) / fs
    attack = np.minimum(t / (attack_ms / 1000.0), 1.0)
    env = attack * np.exp(-decay * t)
    # Fade the tail to zero so the clip boundary itself is inaudible
    # (a hard cutoff reads as a spectral change of its own).
    n_fade = min(int(fade_ms / 1000.0 * fs), n)
    if n_fade > 0:
        ramp = 0.5 * (1.0 + np.cos(np.linspace(0.0, np.pi, n_fade)))
        env[n - n_fade:] *= ramp
    return env


def _noise_burst(fs, rng, duration=0.06):
    n = int(duration * fs)
    return rng.standard_normal(n) * _attack_envelope(n, fs, decay=45.0) * 0.4


def _sine_burst(fs, rng, duration=0.1, freq=880.0):
    n = int(duration * fs)
    t = np.arange(n) / fs
    return np.sin(2 * np.pi * freq * t) * _attack_envelope(n, fs, decay=35.0) * 0.8


def _damped_harmonic(fs, rng, duration=0.12, freq=220.0):
    n = int(duration * fs)
    t = np.arange(n) / fs
    tone = np.zeros(n)
    for k, amp in enumerate((1.0, 0.5, 0.25), start=1):
        tone += amp * np.sin(2 * np.pi * freq * k * t)
    return tone * _attack_envelope(n, fs, decay=40.0) * 0.5


BUILTIN_TIMBRES = {
    "noise": _noise_burst,
    "sine": _sine_burst,
    "damped": _damped_harmonic,
}


def render_timbre(name_or_fn, fs, rng):
    """Render one event of a built-in timbre name or a callable."""
    fn = BUILTIN_TIMBRES.get(name_or_fn, name_or_fn)
    if not callable(fn):
        raise ValueError(f"unknown timbre {name_or_fn!r}")
    return fn(fs, rng)


def synthesize_labeled_audio(events, timbres=None, sample_rate=44100, seed=0,
                             tail=0.3):
    """Render a labeled event list to audio with aligned annotations.

    ``events`` is a list of ``(time_seconds, label)`` with increasing
    times; ``timbres`` maps labels to built-in timbre names or callables
    ``(fs, rng) -> samples`` (defaults to the label itself being a
    built-in name). Overlapping events are summed. Returns
    ``(samples, annotations)`` where annotations is the input event list.
    """
    times = [t for t, _ in events]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("event times must be strictly increasing")
    rng = np.random.default_rng(seed)
    if not events:
        return np.zeros(int(tail * sample_rate)), []
    timbres = timbres or {}
    rendered = []
    for t, label in events:
        clip = render_timbre(timbres.get(label, label), sample_rate, rng)
        rendered.append((int(round(t * sample_rate)), clip))
    total = max(start + len(clip) for start, clip in rendered)
    out = np.zeros(total + int(tail * sample_rate))
    for start, clip in rendered:
        out[start:start + len(clip)] += clip
    peak = np.abs(out).max()
    if peak > 1.0:
        out /= peak * 1.01
    return out, list(events)


def crossfade_pair_track(n_events=160, ioi=0.35, fade_start=6, fade_end=30,
                         freq_a=280.0, freq_b=420.0, sample_rate=44100,
                         seed=0):
    """Alternating pair of damped tones whose pitches converge.

    Events alternate between class "a" (pitch ``freq_a``) and class "b"
    (pitch ``freq_b``); from event ``fade_start`` both pitches glide on
    a log scale toward their geometric mean, reached at ``fade_end``.
    After that the two classes are acoustically identical, which drives
    cluster merging. Returns ``(samples, annotations)``.
    """
    rng = np.random.default_rng(seed)
    target = float(np.sqrt(freq_a * freq_b))
    rendered, annotations = [], []
    for i in range(n_events):
        t = 0.5 + i * ioi
        label = "a" if i % 2 == 0 else "b"
        f = np.clip((i - fade_start) / max(fade_end - fade_start, 1), 0.0, 1.0)
        base = freq_a if label == "a" else freq_b
        freq = float(np.exp((1 - f) * np.log(base) + f * np.log(target)))
        clip = _damped_harmonic(sample_rate, rng, freq=freq)
        rendered.append((int(round(t * sample_rate)), clip))
        annotations.append((t, label))
    total = max(start + len(clip) for start, clip in rendered)
    out = np.zeros(total + int(0.3 * sample_rate))
    for start, clip in rendered:
        out[start:start + len(clip)] += clip
    peak = np.abs(out).max()
    if peak > 1.0:
        out /= peak * 1.01
    return out, annotations
