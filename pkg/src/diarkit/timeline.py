"""Labeled time intervals and the Timeline container shared by VAD, scoring, and I/O."""

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator


@dataclass(frozen=True, order=True)
class Interval:
    start: float
    end: float
    label: str | None = None

    @property
    def duration(self) -> float:
        return self.end - self.start


class Timeline:
    """Ordered set of labeled time intervals for one file.

    Intervals are kept sorted by (start, end, label). Overlaps are allowed in
    general (multi-speaker references); speech timelines produced by the VAD
    are non-overlapping by construction.
    """

    def __init__(self, intervals: Iterable[Interval] = (), file_id: str = ""):
        ivs = sorted(intervals, key=lambda iv: (iv.start, iv.end, iv.label or ""))
        for iv in ivs:
            if not iv.start < iv.end:
                raise ValueError(f"interval start must precede end, got [{iv.start}, {iv.end})")
        self.intervals: tuple[Interval, ...] = tuple(ivs)
        self.file_id = file_id

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Timeline)
            and self.file_id == other.file_id
            and self.intervals == other.intervals
        )

    def __repr__(self) -> str:
        return f"Timeline({self.file_id!r}, {len(self.intervals)} intervals)"

    def labels(self) -> list[str]:
        return sorted({iv.label for iv in self.intervals if iv.label is not None})

    def extent(self) -> tuple[float, float]:
        if not self.intervals:
            return (0.0, 0.0)
        return (min(iv.start for iv in self.intervals), max(iv.end for iv in self.intervals))

    def support(self) -> "Timeline":
        """Union of all intervals with labels dropped (merged, non-overlapping)."""
        merged: list[list[float]] = []
        for iv in self.intervals:
            if merged and iv.start <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], iv.end)
            else:
                merged.append([iv.start, iv.end])
        return Timeline([Interval(a, b) for a, b in merged], self.file_id)

    def total_duration(self) -> float:
        """Total covered time, overlaps counted once."""
        return sum(iv.duration for iv in self.support())

    def relabel(self, fn: Callable[[str | None], str | None]) -> "Timeline":
        return Timeline(
            [Interval(iv.start, iv.end, fn(iv.label)) for iv in self.intervals], self.file_id
        )

    def is_disjoint(self, min_gap: float = 0.0) -> bool:
        """True when consecutive intervals are separated by more than min_gap."""
        for prev, cur in zip(self.intervals, self.intervals[1:]):
            if cur.start - prev.end <= min_gap:
                return False
        return True
