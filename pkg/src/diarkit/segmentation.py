"""Sliding-window subsegmentation of VAD speech regions.

Dense overlapping windows stand in for explicit overlapped-speech detection:
every region is tiled with fixed windows, and a final window anchored to the
region end guarantees full coverage (a missed tail would score as missed
speech).
"""

from dataclasses import dataclass

from .errors import BadParamsError
from .timeline import Timeline

_EPS = 1e-9


@dataclass(frozen=True)
class SubSegment:
    start_s: float
    end_s: float
    region_index: int

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


def slide_windows(
    speech: Timeline,
    window_s: float = 2.0,
    stride_s: float = 0.4,
    min_subsegment_s: float = 0.4,
) -> list[SubSegment]:
    """Cut each speech region into overlapping windows.

    Region [a, b) yields [a + k*stride, a + k*stride + window) for every k
    that fits, plus a tail window [max(a, b - window), b) when uncovered time
    remains. Regions shorter than min_subsegment_s are dropped; shorter-
    than-window regions yield one short subsegment.
    """
    if window_s <= 0 or stride_s <= 0 or stride_s > window_s + _EPS:
        raise BadParamsError(f"need 0 < stride <= window, got window={window_s} stride={stride_s}")
    if min_subsegment_s <= 0:
        raise BadParamsError(f"min_subsegment_s must be positive, got {min_subsegment_s}")

    out: list[SubSegment] = []
    for region_index, region in enumerate(speech):
        a, b = region.start, region.end
        if b - a < min_subsegment_s - _EPS:
            continue
        last_end = a
        k = 0
        while a + k * stride_s + window_s <= b + _EPS:
            start = a + k * stride_s
            end = min(start + window_s, b)
            out.append(SubSegment(start, end, region_index))
            last_end = end
            k += 1
        if b - last_end > _EPS:
            out.append(SubSegment(max(a, b - window_s), b, region_index))
    out.sort(key=lambda s: (s.start_s, s.end_s))
    return out
