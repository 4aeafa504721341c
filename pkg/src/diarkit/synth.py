"""Deterministic synthetic conversations with known ground truth.

Each speaker is band-limited noise in a distinct frequency band, so the
built-in pooled embedder separates them by construction. Turns last 2-6 s
with 0.3-1.0 s silences. Turns carry a short fade-in, a mild syllabic
amplitude modulation, and an exponential fade-out, over a low background
noise floor: the energy VAD then behaves like it does on real speech
(thresholds bite in the fades, hangover covers the decay) instead of seeing
rectangular bursts.
"""

import numpy as np

from .audio_io import AudioBuffer
from .errors import BadParamsError
from .timeline import Interval, Timeline

MAX_SPEAKERS = 8

_BAND_LO_HZ = 300.0
_BAND_HI_HZ = 7000.0
_SPEECH_RMS = 0.1
_BACKGROUND_RMS = 0.001
_FADE_IN_S = 0.08
_FADE_OUT_SPAN_S = 0.4
_FADE_OUT_TAU_S = 0.06


def speaker_bands(n_speakers: int) -> list[tuple[float, float]]:
    """Disjoint frequency bands, one per speaker, with guard margins."""
    width = (_BAND_HI_HZ - _BAND_LO_HZ) / n_speakers
    margin = 0.15 * width
    return [
        (_BAND_LO_HZ + i * width + margin, _BAND_LO_HZ + (i + 1) * width - margin)
        for i in range(n_speakers)
    ]


def _band_noise(rng: np.random.Generator, n: int, band: tuple[float, float], sr: int) -> np.ndarray:
    """Unit-RMS noise restricted to a frequency band via FFT masking."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sr)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    shaped = np.fft.irfft(spectrum, n=n)
    rms = np.sqrt(np.mean(shaped**2))
    return shaped / max(rms, 1e-12)


def _turn_envelope(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    env = np.ones(n)

    fade_in = min(int(_FADE_IN_S * sr), n)
    if fade_in > 0:
        env[:fade_in] *= np.linspace(0.0, 1.0, fade_in, endpoint=False)

    syl_rate = rng.uniform(3.0, 5.0)
    syl_phase = rng.uniform(0.0, 2.0 * np.pi)
    env *= 1.0 - 0.5 * (0.5 + 0.5 * np.sin(2.0 * np.pi * syl_rate * t + syl_phase))

    fade_span = min(int(_FADE_OUT_SPAN_S * sr), n)
    if fade_span > 0:
        tail = np.arange(fade_span) / sr
        env[n - fade_span :] *= np.exp(-tail / _FADE_OUT_TAU_S)
    return env


def synth_conversation(
    n_speakers: int,
    duration_s: float,
    seed: int = 0,
    sample_rate: int = 16000,
    file_id: str | None = None,
) -> tuple[AudioBuffer, Timeline]:
    """Generate a conversation plus its reference speaker timeline.

    Deterministic given (n_speakers, duration_s, seed, sample_rate). The
    first n_speakers turns cycle through every speaker; afterwards the next
    speaker is random but never the previous one.
    """
    if not 1 <= n_speakers <= MAX_SPEAKERS:
        raise BadParamsError(f"n_speakers must be 1..{MAX_SPEAKERS}, got {n_speakers}")
    if duration_s <= 0:
        raise BadParamsError(f"duration_s must be positive, got {duration_s}")

    rng = np.random.default_rng(seed)
    if file_id is None:
        file_id = f"synth_{n_speakers}spk_seed{seed}"
    total = int(round(duration_s * sample_rate))
    signal = rng.standard_normal(total) * _BACKGROUND_RMS
    bands = speaker_bands(n_speakers)

    intervals = []
    t = rng.uniform(0.3, 0.8)
    turn_index = 0
    prev_speaker = -1
    while True:
        turn_len = rng.uniform(2.0, 6.0)
        if t + turn_len > duration_s:
            remaining = duration_s - t
            if remaining < 2.0:
                break
            turn_len = remaining
        if turn_index < n_speakers:
            speaker = turn_index
        else:
            speaker = int(rng.integers(n_speakers - 1)) if n_speakers > 1 else 0
            if n_speakers > 1 and speaker >= prev_speaker:
                speaker += 1

        start = int(round(t * sample_rate))
        length = int(round(turn_len * sample_rate))
        length = min(length, total - start)
        noise = _band_noise(rng, length, bands[speaker], sample_rate)
        env = _turn_envelope(rng, length, sample_rate)
        signal[start : start + length] += _SPEECH_RMS * noise * env

        intervals.append(Interval(start / sample_rate, (start + length) / sample_rate, f"S{speaker}"))
        prev_speaker = speaker
        turn_index += 1
        t = (start + length) / sample_rate + rng.uniform(0.3, 1.0)
        if t >= duration_s - 2.0:
            break

    np.clip(signal, -1.0, 1.0, out=signal)
    buf = AudioBuffer(samples=signal, sample_rate=sample_rate, source_id=file_id)
    return buf, Timeline(intervals, file_id)
