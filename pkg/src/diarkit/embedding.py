"""Subsegment embedding providers.

Two providers share one contract: map each subsegment to a unit-norm vector
of a fixed dimension.

* BuiltinPooledEmbedder - hermetic stand-in for a neural extractor: pools
  per-bin mean and standard deviation of the log-mel frames inside the
  subsegment, projects the pooled statistics through a fixed seeded Gaussian
  matrix, and L2-normalizes. Fully deterministic given (features, seed, dim).
* EmbeddingStore - precomputed vectors loaded from a text file, keyed by
  (file_id, start_s, end_s), so real extractor outputs can be plugged in.

Store format, line-oriented text:

    DIARKIT-EMB v1 dim=D
    <file_id> <start_s> <end_s> <v1> ... <vD>

The random projection is drawn from a SplitMix64 stream (state advances by
0x9E3779B97F4A7C15; output is the xor-shift/multiply finalizer) turned into
standard normals via Box-Muller, consumed row-major. Identical seeds give
bit-identical matrices on any platform.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptySubsegmentError,
    MissingEntryError,
    ParseError,
    ZeroVectorError,
)
from .features import FeatureMatrix
from .segmentation import SubSegment

_MASK64 = (1 << 64) - 1
_STORE_MAGIC = "DIARKIT-EMB v1"
_LOOKUP_TOL_S = 1e-3


def splitmix64_stream(seed: int, count: int) -> list[int]:
    """First `count` outputs of the SplitMix64 generator."""
    state = seed & _MASK64
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


def gaussian_projection(rows: int, cols: int, seed: int) -> np.ndarray:
    """Seeded (rows, cols) matrix of standard normals, filled row-major."""
    n = rows * cols
    raw = splitmix64_stream(seed, n + (n & 1))
    u = (np.array(raw, dtype=np.float64) + 0.5) * 2.0**-64  # uniform in (0, 1)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    pairs = np.empty(2 * len(u1))
    pairs[0::2] = r * np.cos(2.0 * np.pi * u2)
    pairs[1::2] = r * np.sin(2.0 * np.pi * u2)
    return pairs[:n].reshape(rows, cols)


def unit_normalize(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVectorError("cannot normalize a zero vector")
    return np.asarray(v, dtype=np.float64) / norm


def pooled_stats(frames: np.ndarray) -> np.ndarray:
    """Concatenated per-bin mean and standard deviation over frames."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise EmptySubsegmentError("need at least one feature frame")
    return np.concatenate([frames.mean(axis=0), frames.std(axis=0)])


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = "builtin_pooled"  # or "file_store"
    dim: int = 64
    seed: int = 42
    store_path: str | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"embedding dim must be >= 2, got {self.dim}")


class BuiltinPooledEmbedder:
    """Deterministic mean+std pooling behind a fixed random projection."""

    def __init__(self, dim: int = 64, seed: int = 42):
        if dim < 2:
            raise ValueError(f"embedding dim must be >= 2, got {dim}")
        self.dim = dim
        self.seed = seed
        self._projections: dict[int, np.ndarray] = {}  # stat dim -> matrix

    def _projection(self, stat_dim: int) -> np.ndarray:
        if stat_dim not in self._projections:
            self._projections[stat_dim] = gaussian_projection(self.dim, stat_dim, self.seed)
        return self._projections[stat_dim]

    def embed_frames(self, frames: np.ndarray) -> np.ndarray:
        stats = pooled_stats(frames)
        return unit_normalize(self._projection(len(stats)) @ stats)

    def embed_subsegments(
        self, features: FeatureMatrix, subsegments: Sequence[SubSegment], file_id: str = ""
    ) -> np.ndarray:
        """Embed every subsegment; rows are unit-norm, shape (n, dim)."""
        out = np.empty((len(subsegments), self.dim))
        for i, seg in enumerate(subsegments):
            mask = (features.frame_times >= seg.start_s) & (features.frame_times < seg.end_s)
            frames = features.frames[mask]
            if frames.shape[0] == 0:
                raise EmptySubsegmentError(
                    f"subsegment [{seg.start_s:.3f}, {seg.end_s:.3f}) covers no frames"
                )
            out[i] = self.embed_frames(frames)
        return out


class EmbeddingStore:
    """Precomputed embeddings keyed by (file_id, start_s, end_s)."""

    def __init__(self, entries: dict[tuple[str, float, float], np.ndarray], dim: int):
        self.entries = entries
        self.dim = dim
        self._by_file: dict[str, list[tuple[float, float, np.ndarray]]] = {}
        for (fid, start, end), vec in entries.items():
            self._by_file.setdefault(fid, []).append((start, end, vec))
        for rows in self._by_file.values():
            rows.sort(key=lambda r: (r[0], r[1]))

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, file_id: str, start_s: float, end_s: float) -> np.ndarray:
        best = None
        for start, end, vec in self._by_file.get(file_id, ()):
            if abs(start - start_s) <= _LOOKUP_TOL_S and abs(end - end_s) <= _LOOKUP_TOL_S:
                gap = abs(start - start_s)
                if best is None or gap < best[0]:
                    best = (gap, vec)
        if best is None:
            raise MissingEntryError(
                f"no embedding for ({file_id}, {start_s:.3f}, {end_s:.3f}) within 1 ms"
            )
        return best[1]

    def embed_subsegments(
        self, features: FeatureMatrix | None, subsegments: Sequence[SubSegment], file_id: str = ""
    ) -> np.ndarray:
        out = np.empty((len(subsegments), self.dim))
        for i, seg in enumerate(subsegments):
            out[i] = self.lookup(file_id, seg.start_s, seg.end_s)
        return out


def load_embedding_store(path) -> EmbeddingStore:
    """Parse a store file; vectors are re-normalized on load."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(_STORE_MAGIC):
        raise ParseError(f"missing '{_STORE_MAGIC}' header", line_no=1)
    header = lines[0].split()
    try:
        dim = int(header[-1].removeprefix("dim="))
    except (ValueError, IndexError):
        raise ParseError("header must end with dim=<D>", line_no=1) from None
    if dim < 2:
        raise ParseError(f"dim must be >= 2, got {dim}", line_no=1)

    entries: dict[tuple[str, float, float], np.ndarray] = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3 + dim:
            raise DimensionMismatchError(
                f"line {line_no}: expected {dim}-dim vector, got {len(tokens) - 3} components"
            )
        try:
            start, end = float(tokens[1]), float(tokens[2])
            vec = np.array([float(t) for t in tokens[3:]])
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", line_no) from None
        entries[(tokens[0], start, end)] = unit_normalize(vec)
    return EmbeddingStore(entries, dim)


def write_embedding_store(path, entries: dict[tuple[str, float, float], np.ndarray]) -> None:
    dims = {len(v) for v in entries.values()}
    if len(dims) > 1:
        raise DimensionMismatchError(f"mixed vector dimensions: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    rows = [f"{_STORE_MAGIC} dim={dim}"]
    for (fid, start, end), vec in sorted(entries.items()):
        comps = " ".join(f"{x:.9g}" for x in vec)
        rows.append(f"{fid} {start:.3f} {end:.3f} {comps}")
    Path(path).write_text("\n".join(rows) + "\n")


def make_provider(cfg: EmbeddingProviderConfig):
    if cfg.kind == "builtin_pooled":
        return BuiltinPooledEmbedder(dim=cfg.dim, seed=cfg.seed)
    if cfg.kind == "file_store":
        if cfg.store_path is None:
            raise ValueError("file_store provider requires store_path")
        return load_embedding_store(cfg.store_path)
    raise ValueError(f"unknown provider kind {cfg.kind!r}")
