"""Log-mel filterbank front end.

80-dimensional log-mel energies over 25 ms windows with a 10 ms stride:
Hann window, magnitude-squared spectrum, HTK mel scale, natural log. No
pre-emphasis and no normalization; the embedding provider decides what to do
with the raw log energies.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer
from .errors import DegenerateFilterError, TooShortError


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 80
    win_ms: float = 25.0
    hop_ms: float = 10.0
    fft_size: int | None = None  # None: next power of two >= window samples
    f_min: float = 20.0
    f_max: float | None = None  # None: sample_rate / 2
    log_floor: float = 1e-10

    def win_samples(self, sample_rate: int) -> int:
        return int(round(self.win_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def resolved_fft(self, sample_rate: int) -> int:
        return self.fft_size if self.fft_size is not None else _next_pow2(self.win_samples(sample_rate))

    def resolved_fmax(self, sample_rate: int) -> float:
        return self.f_max if self.f_max is not None else sample_rate / 2.0

    def validate(self, sample_rate: int) -> None:
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if not 0 < self.hop_ms <= self.win_ms:
            raise ValueError("need 0 < hop_ms <= win_ms")
        if self.resolved_fft(sample_rate) < self.win_samples(sample_rate):
            raise ValueError("fft_size smaller than the window")
        if not self.f_min < self.resolved_fmax(sample_rate) <= sample_rate / 2.0:
            raise ValueError("need f_min < f_max <= sample_rate/2")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


@dataclass(frozen=True)
class FeatureMatrix:
    """frames: (T, n_mels) log energies; frame_times: frame-center seconds."""

    frames: np.ndarray
    frame_times: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_mels(self) -> int:
        return self.frames.shape[1]


def mel_filterbank_matrix(cfg: MelConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, fft_size//2 + 1).

    Filter centers are equally spaced on the mel scale between f_min and
    f_max. Raises DegenerateFilterError when the FFT resolution cannot give
    every filter a positive entry.
    """
    cfg.validate(sample_rate)
    fft_size = cfg.resolved_fft(sample_rate)
    n_bins = fft_size // 2 + 1
    bin_freqs = np.arange(n_bins) * sample_rate / fft_size

    mel_pts = np.linspace(
        hz_to_mel(cfg.f_min), hz_to_mel(cfg.resolved_fmax(sample_rate)), cfg.n_mels + 2
    )
    hz_pts = mel_to_hz(mel_pts)

    bank = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        left, center, right = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        rising = (bin_freqs - left) / max(center - left, 1e-30)
        falling = (right - bin_freqs) / max(right - center, 1e-30)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling))

    dead = np.where(~bank.any(axis=1))[0]
    if dead.size:
        raise DegenerateFilterError(
            f"{dead.size} of {cfg.n_mels} filters have no FFT bin "
            f"(first dead filter index {dead[0]}); reduce n_mels or raise fft_size"
        )
    return bank


def filter_center_freqs(cfg: MelConfig, sample_rate: int) -> np.ndarray:
    """Center frequency in Hz of each mel filter."""
    mel_pts = np.linspace(
        hz_to_mel(cfg.f_min), hz_to_mel(cfg.resolved_fmax(sample_rate)), cfg.n_mels + 2
    )
    return mel_to_hz(mel_pts)[1:-1]


def log_mel(buf: AudioBuffer, cfg: MelConfig = MelConfig()) -> FeatureMatrix:
    """Log-mel energies of a mono buffer.

    T = floor((N - win) / hop) + 1 frames; each frame is
    log(max(filterbank @ |rfft(hann * frame)|^2, log_floor)).
    """
    sr = buf.sample_rate
    cfg.validate(sr)
    win = cfg.win_samples(sr)
    hop = cfg.hop_samples(sr)
    x = np.asarray(buf.samples, dtype=np.float64)
    if len(x) < win:
        raise TooShortError(f"{len(x)} samples < one {win}-sample window")

    n_frames = (len(x) - win) // hop + 1
    idx = np.arange(win)[np.newaxis, :] + hop * np.arange(n_frames)[:, np.newaxis]
    frames = x[idx] * np.hanning(win)[np.newaxis, :]

    spec = np.fft.rfft(frames, n=cfg.resolved_fft(sr), axis=1)
    power = spec.real**2 + spec.imag**2
    bank = mel_filterbank_matrix(cfg, sr)
    energies = np.log(np.maximum(power @ bank.T, cfg.log_floor))

    times = (hop * np.arange(n_frames) + win / 2.0) / sr
    return FeatureMatrix(frames=energies, frame_times=times)


# Feature dump: 16-byte header (magic "MELF", u32 T, u32 n_mels, u32 reserved)
# followed by row-major float32 data.

_MELF_MAGIC = b"MELF"


def write_features(path, feats: FeatureMatrix) -> None:
    header = _MELF_MAGIC + struct.pack("<III", feats.n_frames, feats.n_mels, 0)
    Path(path).write_bytes(header + feats.frames.astype("<f4").tobytes())


def read_features(path, hop_ms: float = 10.0, win_ms: float = 25.0) -> FeatureMatrix:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != _MELF_MAGIC:
        raise ValueError(f"{path}: not a MELF feature dump")
    t, n_mels, _ = struct.unpack_from("<III", data, 4)
    expected = 16 + 4 * t * n_mels
    if len(data) < expected:
        raise ValueError(f"{path}: truncated feature dump")
    frames = np.frombuffer(data[16:expected], dtype="<f4").reshape(t, n_mels).astype(np.float64)
    times = (np.arange(t) * hop_ms + win_ms / 2.0) / 1000.0
    return FeatureMatrix(frames=frames, frame_times=times)
