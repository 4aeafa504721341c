"""RTTM/UEM I/O, hypothesis assembly, and diarization error rate scoring.

DER = missed speech + false alarm + speaker error, each as a percentage of
scored reference speaker time (overlap counted multiply, so DER can exceed
100). Time is carried internally as integer millisecond ticks, which makes
the interval arithmetic exact and the scorer reproducible; the speaker error
is defined through an optimal one-to-one reference/hypothesis speaker
mapping (Hungarian assignment on the overlap-duration matrix).
"""

from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterAssignment
from .errors import EmptyReferenceError, LengthMismatchError, ParseError
from .segmentation import SubSegment
from .timeline import Interval, Timeline

TICKS_PER_SECOND = 1000


def _ticks(seconds: float) -> int:
    return round(seconds * TICKS_PER_SECOND)


@dataclass(frozen=True)
class RttmRecord:
    file_id: str
    channel: int
    onset_s: float
    duration_s: float
    speaker: str


@dataclass(frozen=True)
class DERReport:
    """Error components in seconds plus the mapping that produced them.

    total_ref_s is the scored reference speaker time (the DER denominator).
    Percentage views are derived; der_pct is the exact sum of the three
    component percentages.
    """

    ms_s: float
    fa_s: float
    se_s: float
    total_ref_s: float
    mapping: dict[str, str] = field(default_factory=dict)  # hypothesis -> reference

    def _pct(self, seconds: float) -> float:
        return 100.0 * seconds / self.total_ref_s

    @property
    def ms_pct(self) -> float:
        return self._pct(self.ms_s)

    @property
    def fa_pct(self) -> float:
        return self._pct(self.fa_s)

    @property
    def se_pct(self) -> float:
        return self._pct(self.se_s)

    @property
    def der_pct(self) -> float:
        return self.ms_pct + self.fa_pct + self.se_pct


# --- RTTM / UEM ---


def parse_rttm(text: str) -> dict[str, list[RttmRecord]]:
    """Parse SPEAKER lines into records grouped by file id.

    Blank lines, comments (;; or #), and non-SPEAKER record types are
    skipped. Raises ParseError (with line number) on wrong field counts,
    non-numeric times, negative onsets, or non-positive durations.
    """
    records: dict[str, list[RttmRecord]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";;") or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] != "SPEAKER":
            continue
        if len(tokens) != 10:
            raise ParseError(f"SPEAKER line needs 10 fields, got {len(tokens)}", line_no)
        try:
            onset = float(tokens[3])
            duration = float(tokens[4])
        except ValueError as exc:
            raise ParseError(f"non-numeric time field: {exc}", line_no) from None
        if not (np.isfinite(onset) and np.isfinite(duration)):
            raise ParseError("non-finite time field", line_no)
        try:
            channel = int(tokens[2])
        except ValueError:
            raise ParseError(f"non-integer channel {tokens[2]!r}", line_no) from None
        if onset < 0:
            raise ParseError(f"negative onset {onset}", line_no)
        if duration <= 0:
            raise ParseError(f"non-positive duration {duration}", line_no)
        rec = RttmRecord(tokens[1], channel, onset, duration, tokens[7])
        records.setdefault(rec.file_id, []).append(rec)
    return records


def write_rttm(records: list[RttmRecord]) -> str:
    """10-field SPEAKER lines, times at millisecond precision."""
    lines = [
        f"SPEAKER {r.file_id} {r.channel} {r.onset_s:.3f} {r.duration_s:.3f} "
        f"<NA> <NA> {r.speaker} <NA> <NA>"
        for r in records
    ]
    return "".join(line + "\n" for line in lines)


def records_to_timeline(records: list[RttmRecord], file_id: str) -> Timeline:
    return Timeline(
        [Interval(r.onset_s, r.onset_s + r.duration_s, r.speaker) for r in records], file_id
    )


def timeline_to_records(timeline: Timeline, channel: int = 1) -> list[RttmRecord]:
    return [
        RttmRecord(timeline.file_id, channel, iv.start, iv.duration, iv.label or "spk")
        for iv in timeline
    ]


def parse_uem(text: str) -> dict[str, Timeline]:
    """Parse '<file> <chan> <start> <end>' scoring-region lines per file."""
    regions: dict[str, list[Interval]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";;") or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 4:
            raise ParseError(f"UEM line needs 4 fields, got {len(tokens)}", line_no)
        try:
            start, end = float(tokens[2]), float(tokens[3])
        except ValueError as exc:
            raise ParseError(f"non-numeric time field: {exc}", line_no) from None
        if end <= start:
            raise ParseError(f"end {end} not after start {start}", line_no)
        regions.setdefault(tokens[0], []).append(Interval(start, end))
    return {fid: Timeline(ivs, fid).support() for fid, ivs in regions.items()}


# --- hypothesis assembly ---


def assemble_hypothesis(
    subsegments: list[SubSegment], assignment: ClusterAssignment, file_id: str = ""
) -> Timeline:
    """Convert labeled windows into non-overlapping speaker turns.

    Overlapping neighbors with different labels split at the midpoint of
    their overlap; same-label neighbors that touch or overlap merge into one
    turn. Speaker names are spk<cluster id>.
    """
    labels = assignment.labels
    if len(subsegments) != len(labels):
        raise LengthMismatchError(f"{len(subsegments)} subsegments vs {len(labels)} labels")
    if not subsegments:
        return Timeline([], file_id)

    order = sorted(range(len(subsegments)), key=lambda i: (subsegments[i].start_s, subsegments[i].end_s))
    turns: list[list] = []  # [start, end, label]
    for i in order:
        seg, lab = subsegments[i], int(labels[i])
        start, end = seg.start_s, seg.end_s
        if turns and turns[-1][2] == lab and start - turns[-1][1] <= 1e-6:
            turns[-1][1] = max(turns[-1][1], end)
            continue
        if turns and start < turns[-1][1]:
            mid = (start + turns[-1][1]) / 2.0
            mid = max(mid, turns[-1][0])
            turns[-1][1] = mid
            start = mid
        if end - start > 1e-9:
            turns.append([start, end, lab])
    intervals = [Interval(s, e, f"spk{lab}") for s, e, lab in turns if e - s > 1e-9]
    return Timeline(intervals, file_id)


# --- optimal speaker mapping ---


def _hungarian_min(cost: np.ndarray) -> list[int]:
    """Minimum-cost assignment for an (n, m) matrix with n <= m.

    Potentials-based shortest augmenting path formulation, O(n^2 m).
    Returns the column assigned to each row.
    """
    n, m = cost.shape
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    match = [0] * (m + 1)  # 1-based row matched to each column, 0 = free
    way = [0] * (m + 1)

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    assigned = [-1] * n
    for j in range(1, m + 1):
        if match[j] > 0:
            assigned[match[j] - 1] = j - 1
    return assigned


def optimal_speaker_mapping(overlap: np.ndarray) -> list[tuple[int, int]]:
    """One-to-one (reference, hypothesis) index pairs maximizing total overlap.

    Zero-overlap pairs are left unmapped; extra speakers on either side stay
    unmatched.
    """
    overlap = np.asarray(overlap, dtype=np.float64)
    if overlap.size == 0:
        return []
    if np.any(overlap < 0):
        raise ValueError("overlap matrix must be non-negative")
    transposed = overlap.shape[0] > overlap.shape[1]
    mat = overlap.T if transposed else overlap
    assigned = _hungarian_min(-mat)
    pairs = []
    for r, h in enumerate(assigned):
        if h >= 0 and mat[r, h] > 0:
            pairs.append((h, r) if transposed else (r, h))
    return sorted(pairs)


# --- DER ---


def _tick_intervals(timeline: Timeline) -> dict[str, list[tuple[int, int]]]:
    """Per-speaker half-open tick intervals; zero-width intervals dropped."""
    per: dict[str, list[tuple[int, int]]] = {}
    for iv in timeline:
        a, b = _ticks(iv.start), _ticks(iv.end)
        if b > a:
            per.setdefault(iv.label or "speech", []).append((a, b))
    return per


def _union(segs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[list[int]] = []
    for a, b in sorted(segs):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def _subtract(segs: list[tuple[int, int]], holes: list[tuple[int, int]]) -> list[tuple[int, int]]:
    holes = _union(holes)
    out = []
    for a, b in segs:
        cur = a
        for ha, hb in holes:
            if hb <= cur or ha >= b:
                continue
            if ha > cur:
                out.append((cur, min(ha, b)))
            cur = max(cur, hb)
            if cur >= b:
                break
        if cur < b:
            out.append((cur, b))
    return out


def _overlap_len(xs: list[tuple[int, int]], ys: list[tuple[int, int]]) -> int:
    total = 0
    for a, b in xs:
        for c, d in ys:
            lo, hi = max(a, c), min(b, d)
            if hi > lo:
                total += hi - lo
    return total


def compute_der(
    ref: Timeline,
    hyp: Timeline,
    uem: Timeline | None = None,
    collar_s: float = 0.0,
) -> DERReport:
    """Score a hypothesis against a multi-label reference.

    The scored region is the UEM (or the full extent of reference plus
    hypothesis) minus collar_s on both sides of every reference turn
    boundary. Each atomic interval with r reference speakers, h hypothesis
    speakers, and m optimally-mapped matches contributes
    dur*max(0, r-h) missed, dur*max(0, h-r) false alarm, and
    dur*(min(r, h) - m) speaker error; the denominator is the total scored
    reference speaker time (sum of dur*r).
    """
    ref_spk = _tick_intervals(ref)
    hyp_spk = _tick_intervals(hyp)

    if uem is not None and len(uem):
        scored = _union([(_ticks(iv.start), _ticks(iv.end)) for iv in uem])
    else:
        all_segs = [seg for segs in (*ref_spk.values(), *hyp_spk.values()) for seg in segs]
        if not all_segs:
            raise EmptyReferenceError("no reference speech to score")
        scored = [(min(a for a, _ in all_segs), max(b for _, b in all_segs))]

    if collar_s > 0:
        c = _ticks(collar_s)
        holes = []
        for segs in ref_spk.values():
            for a, b in segs:
                holes.append((a - c, a + c))
                holes.append((b - c, b + c))
        scored = _subtract(scored, holes)

    def clip(per: dict[str, list[tuple[int, int]]]) -> dict[str, list[tuple[int, int]]]:
        clipped = {}
        for spk, segs in per.items():
            kept = []
            for a, b in segs:
                for ra, rb in scored:
                    lo, hi = max(a, ra), min(b, rb)
                    if hi > lo:
                        kept.append((lo, hi))
            clipped[spk] = kept
        return clipped

    ref_clipped = clip(ref_spk)
    hyp_clipped = clip(hyp_spk)
    ref_names = sorted(ref_clipped)
    hyp_names = sorted(hyp_clipped)

    denom = sum(b - a for segs in ref_clipped.values() for a, b in segs)
    if denom == 0:
        raise EmptyReferenceError("no reference speech inside the scored region")

    overlap = np.zeros((len(ref_names), len(hyp_names)))
    for i, rn in enumerate(ref_names):
        for j, hn in enumerate(hyp_names):
            overlap[i, j] = _overlap_len(ref_clipped[rn], hyp_clipped[hn])
    pairs = optimal_speaker_mapping(overlap)
    mapping = {hyp_names[j]: ref_names[i] for i, j in pairs}
    mapped_pairs = {(ref_names[i], hyp_names[j]) for i, j in pairs}

    # atomic sweep over breakpoints of all clipped intervals
    points = set()
    for segs in (*ref_clipped.values(), *hyp_clipped.values()):
        for a, b in segs:
            points.add(a)
            points.add(b)
    points = sorted(points)

    ms = fa = se = 0
    for t0, t1 in zip(points, points[1:]):
        dur = t1 - t0
        active_ref = [s for s in ref_names if _covers(ref_clipped[s], t0)]
        active_hyp = [s for s in hyp_names if _covers(hyp_clipped[s], t0)]
        r, h = len(active_ref), len(active_hyp)
        if r == 0 and h == 0:
            continue
        m = sum(1 for rs in active_ref for hs in active_hyp if (rs, hs) in mapped_pairs)
        ms += dur * max(0, r - h)
        fa += dur * max(0, h - r)
        se += dur * (min(r, h) - m)

    to_s = 1.0 / TICKS_PER_SECOND
    return DERReport(ms * to_s, fa * to_s, se * to_s, denom * to_s, mapping)


def _covers(segs: list[tuple[int, int]], t: int) -> bool:
    return any(a <= t < b for a, b in segs)


def vad_score(
    ref: Timeline, hyp: Timeline, uem: Timeline | None = None, collar_s: float = 0.0
) -> tuple[float, float]:
    """Missed-speech and false-alarm percentages with speakers collapsed.

    Both timelines are relabeled to a single speaker, so the speaker error is
    zero by construction and only the VAD quality is measured.
    """
    ref_speech = ref.support().relabel(lambda _: "speech")
    hyp_speech = hyp.support().relabel(lambda _: "speech")
    if not len(ref_speech):
        raise EmptyReferenceError("reference has no speech")
    report = compute_der(ref_speech, hyp_speech, uem=uem, collar_s=collar_s)
    return (report.ms_pct, report.fa_pct)


def combine_reports(reports: list[DERReport]) -> DERReport:
    """Aggregate per-file reports over summed seconds (not averaged percentages)."""
    if not reports:
        raise EmptyReferenceError("nothing to aggregate")
    return DERReport(
        ms_s=sum(r.ms_s for r in reports),
        fa_s=sum(r.fa_s for r in reports),
        se_s=sum(r.se_s for r in reports),
        total_ref_s=sum(r.total_ref_s for r in reports),
        mapping={},
    )
