"""Voice activity detection.

The built-in detector scores non-overlapping frames by log-RMS energy,
min-max normalized per file to [0, 1], then thresholds, applies a trailing
hangover, merges close runs, and drops short ones. Aggressiveness presets
(0..3) mirror the usual "more aggressive = less detected speech" scale by
jointly raising the threshold and shortening the hangover. Externally
computed labels can be imported from plain "start end" lines or RTTM.
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer
from .errors import BadLevelError, ParseError, TooShortError
from .timeline import Interval, Timeline

DEFAULT_THRESHOLD = 0.15

# level -> (threshold, hangover_frames); monotone in detected-speech duration
AGGRESSIVENESS_PRESETS = {
    0: (0.30, 10),
    1: (0.45, 8),
    2: (0.60, 5),
    3: (0.75, 2),
}

_RMS_FLOOR = 1e-10


@dataclass(frozen=True)
class VadConfig:
    threshold: float | None = None  # None: 0.15, or the aggressiveness preset
    frame_ms: int = 20  # one of 10, 20, 30
    aggressiveness: int | None = None
    hangover_frames: int = 8
    min_speech_s: float = 0.2
    merge_gap_s: float = 0.3

    def __post_init__(self):
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.frame_ms not in (10, 20, 30):
            raise ValueError(f"frame_ms must be 10, 20, or 30, got {self.frame_ms}")
        if self.aggressiveness is not None and self.aggressiveness not in AGGRESSIVENESS_PRESETS:
            raise BadLevelError(f"aggressiveness must be 0..3, got {self.aggressiveness}")

    def effective_threshold(self) -> float:
        return self.threshold if self.threshold is not None else DEFAULT_THRESHOLD


def apply_aggressiveness(cfg: VadConfig) -> VadConfig:
    """Resolve the aggressiveness preset into threshold + hangover.

    An explicitly set threshold wins over the preset; the hangover always
    comes from the preset.
    """
    if cfg.aggressiveness is None:
        raise BadLevelError("aggressiveness is not set")
    if cfg.aggressiveness not in AGGRESSIVENESS_PRESETS:
        raise BadLevelError(f"aggressiveness must be 0..3, got {cfg.aggressiveness}")
    preset_thr, preset_hang = AGGRESSIVENESS_PRESETS[cfg.aggressiveness]
    thr = cfg.threshold if cfg.threshold is not None else preset_thr
    return replace(cfg, threshold=thr, hangover_frames=preset_hang)


def resolve_config(cfg: VadConfig) -> VadConfig:
    """Apply the preset when aggressiveness is set, then pin the default threshold."""
    if cfg.aggressiveness is not None:
        cfg = apply_aggressiveness(cfg)
    if cfg.threshold is None:
        cfg = replace(cfg, threshold=DEFAULT_THRESHOLD)
    return cfg


def energy_vad_frames(buf: AudioBuffer, cfg: VadConfig = VadConfig()) -> np.ndarray:
    """Per-frame speech probabilities in [0, 1].

    Probability is the log-RMS energy of each frame_ms frame, min-max
    normalized over the file. A file with no dynamic range (all frames equal,
    e.g. silence) gets all-zero probabilities.
    """
    frame_len = int(round(cfg.frame_ms * buf.sample_rate / 1000.0))
    x = np.asarray(buf.samples, dtype=np.float64)
    n_frames = len(x) // frame_len
    if n_frames < 1:
        raise TooShortError(f"{len(x)} samples < one {frame_len}-sample frame")

    frames = x[: n_frames * frame_len].reshape(n_frames, frame_len)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    log_rms = np.log(np.maximum(rms, _RMS_FLOOR))

    lo, hi = log_rms.min(), log_rms.max()
    if hi - lo < 1e-12:
        return np.zeros(n_frames)
    return (log_rms - lo) / (hi - lo)


def frames_to_regions(probs: np.ndarray, cfg: VadConfig = VadConfig(), file_id: str = "") -> Timeline:
    """Turn frame probabilities into a speech Timeline.

    Frames with prob >= threshold are speech; each run is extended by
    hangover_frames at its end; runs closer than merge_gap_s are merged
    (touching or overlapping runs always merge); runs shorter than
    min_speech_s are dropped.
    """
    probs = np.asarray(probs, dtype=np.float64)
    frame_s = cfg.frame_ms / 1000.0
    thr = cfg.effective_threshold()
    speech = probs >= thr
    n = len(speech)

    # maximal runs of speech frames, as half-open frame-index ranges
    runs: list[list[int]] = []
    i = 0
    while i < n:
        if speech[i]:
            j = i
            while j < n and speech[j]:
                j += 1
            runs.append([i, min(j + cfg.hangover_frames, n)])
            i = j
        else:
            i += 1

    merged: list[list[int]] = []
    merge_frames = cfg.merge_gap_s / frame_s
    for run in runs:
        gap = run[0] - merged[-1][1] if merged else None
        if merged and (gap <= 0 or gap < merge_frames):
            merged[-1][1] = max(merged[-1][1], run[1])
        else:
            merged.append(run)

    intervals = [
        Interval(a * frame_s, b * frame_s)
        for a, b in merged
        if (b - a) * frame_s >= cfg.min_speech_s - 1e-9
    ]
    return Timeline(intervals, file_id)


def detect_speech(buf: AudioBuffer, cfg: VadConfig = VadConfig()) -> Timeline:
    """energy_vad_frames + frames_to_regions with the config fully resolved."""
    cfg = resolve_config(cfg)
    probs = energy_vad_frames(buf, cfg)
    return frames_to_regions(probs, cfg, buf.source_id)


def load_external_vad(path, file_id: str) -> Timeline:
    """Import speech labels from "start_s end_s" lines or RTTM SPEAKER lines.

    Overlapping intervals are merged. RTTM input is filtered to the given
    file_id. Raises ParseError with the offending line number.
    """
    text = Path(path).read_text()
    intervals: list[Interval] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";;"):
            continue
        tokens = line.split()
        if tokens[0] == "SPEAKER":
            if len(tokens) != 10:
                raise ParseError(f"RTTM line needs 10 fields, got {len(tokens)}", line_no)
            if tokens[1] != file_id:
                continue
            try:
                start = float(tokens[3])
                dur = float(tokens[4])
            except ValueError as exc:
                raise ParseError(f"non-numeric time field: {exc}", line_no) from None
            end = start + dur
        else:
            if len(tokens) != 2:
                raise ParseError(f"expected 'start end', got {len(tokens)} fields", line_no)
            try:
                start, end = float(tokens[0]), float(tokens[1])
            except ValueError as exc:
                raise ParseError(f"non-numeric time: {exc}", line_no) from None
        if not (math.isfinite(start) and math.isfinite(end)):
            raise ParseError("non-finite time", line_no)
        if end <= start:
            raise ParseError(f"end {end} not after start {start}", line_no)
        if start < 0:
            raise ParseError(f"negative start {start}", line_no)
        intervals.append(Interval(start, end))
    return Timeline(intervals, file_id).support()
