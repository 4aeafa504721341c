"""WAV reading, downmixing, and rate validation.

Accepts RIFF/WAVE files with PCM-16 or IEEE float-32 samples, the canonical
44-byte header or any chunk layout (unknown chunks are skipped). No
resampling: a rate mismatch is a hard error.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    LengthMismatchError,
    NotWavError,
    RateMismatchError,
    TruncatedFileError,
    UnsupportedEncodingError,
)

PCM16_SCALE = 32768.0  # maps -32768 -> -1.0 exactly, +32767 -> just below 1.0

_FMT_PCM = 0x0001
_FMT_IEEE_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioBuffer:
    """Mono signal: float samples in [-1, 1], sample rate in Hz, file stem id."""

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class WavData:
    """Raw decoded WAV: one float array per channel, plus metadata."""

    channels: tuple[np.ndarray, ...]
    sample_rate: int
    source_id: str

    @property
    def channel_count(self) -> int:
        return len(self.channels)


def read_wav(path) -> WavData:
    """Decode a WAV file into per-channel float arrays in [-1, 1].

    PCM-16 samples are scaled by 1/32768; float-32 samples are clipped to
    [-1, 1]. Raises NotWavError, UnsupportedEncodingError, or
    TruncatedFileError on malformed input.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWavError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    raw_frames = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + chunk_size > len(data):
            raise TruncatedFileError(
                f"{path}: chunk {chunk_id!r} declares {chunk_size} bytes, "
                f"only {len(data) - body_start} available"
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise NotWavError(f"{path}: fmt chunk too small ({chunk_size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            raw_frames = data[body_start : body_start + chunk_size]
        # chunks are word-aligned: odd sizes carry one pad byte
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise NotWavError(f"{path}: missing fmt chunk")
    if raw_frames is None:
        raise TruncatedFileError(f"{path}: missing data chunk")

    audio_format, n_channels, sample_rate, _, block_align, bits = fmt
    if audio_format == _FMT_EXTENSIBLE:
        # sub-format GUID starts with the ordinary format tag
        raise UnsupportedEncodingError(f"{path}: WAVE_FORMAT_EXTENSIBLE is not supported")
    if n_channels < 1 or sample_rate < 1:
        raise NotWavError(f"{path}: invalid fmt fields (channels={n_channels}, rate={sample_rate})")

    if audio_format == _FMT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedEncodingError(
            f"{path}: format tag {audio_format} / {bits}-bit not supported "
            "(need PCM-16 or IEEE float-32)"
        )

    frame_bytes = n_channels * dtype.itemsize
    if block_align and block_align != frame_bytes:
        raise NotWavError(f"{path}: block align {block_align} != {frame_bytes}")
    usable = len(raw_frames) - len(raw_frames) % frame_bytes
    flat = np.frombuffer(raw_frames[:usable], dtype=dtype)
    if flat.size == 0:
        raise EmptyInputError(f"{path}: data chunk holds no complete frames")

    deinterleaved = flat.reshape(-1, n_channels)
    if dtype.kind == "i":
        channels = tuple(
            deinterleaved[:, c].astype(np.float64) / PCM16_SCALE for c in range(n_channels)
        )
    else:
        channels = tuple(
            np.clip(deinterleaved[:, c].astype(np.float64), -1.0, 1.0)
            for c in range(n_channels)
        )
    return WavData(channels=channels, sample_rate=sample_rate, source_id=path.stem)


def downmix_to_mono(
    channels: Sequence[np.ndarray] | Sequence[Sequence[float]],
    sample_rate: int,
    source_id: str = "",
) -> AudioBuffer:
    """Average channels sample-wise into a mono buffer.

    A single channel passes through unchanged. The unweighted mean keeps
    amplitudes inside [-1, 1].
    """
    if len(channels) == 0:
        raise EmptyInputError("no channels to downmix")
    arrays = [np.asarray(ch, dtype=np.float64) for ch in channels]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise LengthMismatchError(f"channel lengths differ: {[len(a) for a in arrays]}")
    if n == 0:
        raise EmptyInputError("channels are empty")
    if len(arrays) == 1:
        samples = arrays[0]
    else:
        samples = np.mean(np.stack(arrays), axis=0)
    return AudioBuffer(samples=samples, sample_rate=sample_rate, source_id=source_id)


def validate_rate(buf: AudioBuffer, expected_rate: int) -> AudioBuffer:
    """Pass the buffer through if its rate matches, else raise RateMismatchError."""
    if buf.sample_rate != expected_rate:
        raise RateMismatchError(buf.sample_rate, expected_rate)
    return buf


def load_mono(path, expected_rate: int | None = None) -> AudioBuffer:
    """read_wav + downmix, optionally enforcing a sample rate."""
    wav = read_wav(path)
    buf = downmix_to_mono(wav.channels, wav.sample_rate, wav.source_id)
    if expected_rate is not None:
        buf = validate_rate(buf, expected_rate)
    return buf


def write_wav(path, samples: np.ndarray, sample_rate: int, channels: int = 1) -> None:
    """Write float samples in [-1, 1] as a canonical-header PCM-16 WAV file.

    Multi-channel input is given as an (n_channels, n_samples) array.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[np.newaxis, :]
    n_channels, n_samples = samples.shape
    if channels != n_channels:
        raise LengthMismatchError(f"declared {channels} channels, got {n_channels}")
    if n_samples == 0:
        raise EmptyInputError("refusing to write an empty WAV file")

    pcm = np.clip(np.rint(samples * PCM16_SCALE), -32768, 32767).astype("<i2")
    interleaved = pcm.T.reshape(-1).tobytes()

    byte_rate = sample_rate * n_channels * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(interleaved)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, _FMT_PCM, n_channels, sample_rate, byte_rate, n_channels * 2, 16
    )
    header += b"data" + struct.pack("<I", len(interleaved))
    Path(path).write_bytes(header + interleaved)
