"""End-to-end diarization: audio -> features -> VAD -> windows -> embeddings
-> clustering -> speaker turns.

PipelineConfig holds every knob and round-trips through a flat key=value
config file. Defaults follow the strongest full-pipeline setting: energy VAD
at aggressiveness 0 with 20 ms frames, 2.0 s windows with 0.4 s stride, and
spectral clustering.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .audio_io import AudioBuffer, downmix_to_mono, read_wav, validate_rate
from .clustering import ahc_cluster, spectral_cluster
from .embedding import BuiltinPooledEmbedder, load_embedding_store
from .errors import BadParamsError
from .features import FeatureMatrix, MelConfig, log_mel
from .scoring import RttmRecord, timeline_to_records
from .segmentation import slide_windows
from .timeline import Timeline
from .vad import VadConfig, detect_speech, load_external_vad, resolve_config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    sample_rate: int = 16000  # expected input rate; 0 accepts any rate
    vad_kind: str = "energy"  # energy | external
    vad: VadConfig = field(default_factory=lambda: VadConfig(aggressiveness=0))
    vad_labels: str | None = None  # file or directory for external labels
    window_s: float = 2.0
    stride_s: float = 0.4
    min_subsegment_s: float = 0.4
    embedder: str = "builtin"  # builtin | file
    embed_dim: int = 64
    embedding_store: str | None = None
    clusterer: str = "spectral"  # spectral | ahc
    num_speakers: int | None = None
    max_speakers: int = 8
    seed: int = 42

    def __post_init__(self):
        if self.vad_kind not in ("energy", "external"):
            raise BadParamsError(f"vad_kind must be energy or external, got {self.vad_kind!r}")
        if self.embedder not in ("builtin", "file"):
            raise BadParamsError(f"embedder must be builtin or file, got {self.embedder!r}")
        if self.clusterer not in ("spectral", "ahc"):
            raise BadParamsError(f"clusterer must be spectral or ahc, got {self.clusterer!r}")


_VAD_KEYS = {f.name for f in fields(VadConfig)}
_TOP_KEYS = {f.name for f in fields(PipelineConfig)} - {"vad"}


def config_to_text(cfg: PipelineConfig) -> str:
    """Serialize to flat key=value lines (vad.* keys for the VAD block)."""
    lines = []
    for f in fields(PipelineConfig):
        if f.name == "vad":
            continue
        lines.append(f"{f.name}={_fmt(getattr(cfg, f.name))}")
    for f in fields(VadConfig):
        lines.append(f"vad.{f.name}={_fmt(getattr(cfg.vad, f.name))}")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    return "none" if value is None else str(value)


def config_from_text(text: str) -> PipelineConfig:
    top: dict = {}
    vad: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BadParamsError(f"config line {line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("vad."):
            name = key[4:]
            if name not in _VAD_KEYS:
                raise BadParamsError(f"config line {line_no}: unknown key {key!r}")
            vad[name] = _coerce(VadConfig, name, value)
        elif key in _TOP_KEYS:
            top[key] = _coerce(PipelineConfig, key, value)
        else:
            raise BadParamsError(f"config line {line_no}: unknown key {key!r}")
    return PipelineConfig(vad=VadConfig(**vad), **top)


def _coerce(cls, name: str, value: str):
    if value == "none" or value == "":
        return None
    target = str({f.name: f.type for f in fields(cls)}[name])
    if "int" in target:
        return int(value)
    if "float" in target:
        return float(value)
    return value


@dataclass
class DiarizeResult:
    file_id: str
    records: list[RttmRecord]
    hypothesis: Timeline
    n_speakers: int
    warnings: list[str] = field(default_factory=list)


def diarize_buffer(buf: AudioBuffer, cfg: PipelineConfig) -> DiarizeResult:
    """Diarize an in-memory mono buffer."""
    warnings: list[str] = []
    file_id = buf.source_id

    if cfg.vad_kind == "external":
        speech = _external_speech(file_id, cfg)
    else:
        speech = detect_speech(buf, resolve_config(cfg.vad))

    if not speech:
        warnings.append(f"{file_id}: no speech detected, empty output")
        return DiarizeResult(file_id, [], Timeline([], file_id), 0, warnings)

    subsegments = slide_windows(speech, cfg.window_s, cfg.stride_s, cfg.min_subsegment_s)
    if not subsegments:
        warnings.append(f"{file_id}: no subsegments after windowing, empty output")
        return DiarizeResult(file_id, [], Timeline([], file_id), 0, warnings)

    features: FeatureMatrix | None = None
    if cfg.embedder == "builtin":
        provider = BuiltinPooledEmbedder(dim=cfg.embed_dim, seed=cfg.seed)
        features = log_mel(buf, MelConfig())
    else:
        if not cfg.embedding_store:
            raise BadParamsError("embedder=file requires embedding_store")
        provider = load_embedding_store(cfg.embedding_store)
    embeddings = provider.embed_subsegments(features, subsegments, file_id)

    if cfg.clusterer == "spectral":
        assignment = spectral_cluster(
            embeddings, k_override=cfg.num_speakers, k_max=cfg.max_speakers, seed=cfg.seed
        )
    else:
        assignment = ahc_cluster(
            embeddings, k_max=cfg.max_speakers, k_override=cfg.num_speakers
        )

    from .scoring import assemble_hypothesis

    hypothesis = assemble_hypothesis(subsegments, assignment, file_id)
    records = timeline_to_records(hypothesis)
    return DiarizeResult(file_id, records, hypothesis, assignment.k, warnings)


def diarize_file(path, cfg: PipelineConfig) -> DiarizeResult:
    """Load, downmix if needed, validate the rate, and diarize one WAV file."""
    wav = read_wav(path)
    if wav.channel_count > 1:
        logger.info("%s: %d channels, downmixing to mono", wav.source_id, wav.channel_count)
    buf = downmix_to_mono(wav.channels, wav.sample_rate, wav.source_id)
    if cfg.sample_rate:
        buf = validate_rate(buf, cfg.sample_rate)
    return diarize_buffer(buf, cfg)


def _external_speech(file_id: str, cfg: PipelineConfig) -> Timeline:
    if not cfg.vad_labels:
        raise BadParamsError("vad_kind=external requires vad_labels")
    root = Path(cfg.vad_labels)
    if root.is_dir():
        for suffix in (".lab", ".txt", ".rttm"):
            candidate = root / f"{file_id}{suffix}"
            if candidate.exists():
                return load_external_vad(candidate, file_id)
        raise BadParamsError(f"no external VAD labels for {file_id} under {root}")
    return load_external_vad(root, file_id)


def set_vad_option(cfg: PipelineConfig, **vad_overrides) -> PipelineConfig:
    return replace(cfg, vad=replace(cfg.vad, **vad_overrides))
