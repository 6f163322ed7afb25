"""Projection sequences and stitch candidate generation for triple patterning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .geometry import Feature, Rect, bbox, disjoint_pieces, touching

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


class MultiPinError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    label: int


@dataclass(frozen=True)
class ProjectionSequence:
    feature: str
    axis: str
    lo: int
    hi: int
    segments: tuple[Segment, ...]
    sub: int = 0

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.segments]

    def __str__(self):
        return "".join(str(min(lab, 9)) for lab in self.labels)


@dataclass(frozen=True)
class StitchCandidate:
    feature: str
    position: int
    kind: str  # "dpl" or "lost"
    axis: str = HORIZONTAL
    sub: int = 0


@dataclass(frozen=True)
class SubFeature:
    feature: str
    index: int
    rect: Rect

    @property
    def axis(self):
        return long_axis(self.rect)


def long_axis(r: Rect) -> str:
    return HORIZONTAL if r.width >= r.height else VERTICAL


def _is_rectangle(rects: Sequence[Rect]) -> bool:
    box = bbox(rects)
    return sum(p.area for p, _ in disjoint_pieces(rects)) == box.area


def decompose_multipin(feature: Feature) -> list[SubFeature]:
    """Split a feature into straight runs, one rectangle each.

    Rectangles whose union is itself a rectangle are fused first, so a straight
    wire drawn as several abutting pieces stays a single run.
    """
    rects = list(feature.rects)
    if _is_rectangle(rects):
        return [SubFeature(feature.id, 0, bbox(rects))]
    merged = True
    while merged:
        merged = False
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                pair = [rects[i], rects[j]]
                if touching(*pair) and _is_rectangle(pair):
                    rects[i] = bbox(pair)
                    del rects[j]
                    merged = True
                    break
            if merged:
                break
    return [SubFeature(feature.id, i, r) for i, r in enumerate(rects)]


def _axis_extent(r: Rect, axis: str):
    return (r.x0, r.x1) if axis == HORIZONTAL else (r.y0, r.y1)


def _cross_extent(r: Rect, axis: str):
    return (r.y0, r.y1) if axis == HORIZONTAL else (r.x0, r.x1)


def projection_interval(sub: Rect, axis: str, q: Rect, dis_m: float):
    """Open axis interval of ``sub`` whose cross-sections lie closer than dis_m to q."""
    c0, c1 = _cross_extent(sub, axis)
    q0, q1 = _cross_extent(q, axis)
    gap = max(0, q0 - c1, c0 - q1)
    if gap >= dis_m:
        return None
    reach = math.sqrt(dis_m * dis_m - gap * gap)
    a0, a1 = _axis_extent(q, axis)
    lo, hi = _axis_extent(sub, axis)
    lo2, hi2 = max(lo, a0 - reach), min(hi, a1 + reach)
    if lo2 >= hi2:
        return None
    return (lo2, hi2)


def _merge_intervals(ivs):
    ivs = sorted(ivs)
    out = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def compute_projection_sequence(sub, neighbors: Iterable[Sequence[Rect]], dis_m: float,
                                feature_id: str | None = None) -> ProjectionSequence:
    """Label the runs of a straight shape by how many neighbor features project onto them.

    ``sub`` is a :class:`SubFeature`, a :class:`Rect` or a single-run
    :class:`Feature`; ``neighbors`` holds one rectangle list per neighbor
    feature. Zero-length terminal segments keep both ends at label 0.
    """
    index = 0
    if isinstance(sub, Feature):
        runs = decompose_multipin(sub)
        if len(runs) != 1:
            raise MultiPinError(f"feature {sub.id!r} has {len(runs)} runs; decompose it first")
        feature_id, rect = sub.id, runs[0].rect
    elif isinstance(sub, SubFeature):
        feature_id, rect, index = sub.feature, sub.rect, sub.index
    else:
        rect = sub
    axis = long_axis(rect)
    lo, hi = _axis_extent(rect, axis)
    covers = []
    for geom in neighbors:
        ivs = [iv for q in geom if (iv := projection_interval(rect, axis, q, dis_m))]
        if ivs:
            covers.append(_merge_intervals(ivs))
    cuts = {float(lo), float(hi)}
    for ivs in covers:
        for a, b in ivs:
            cuts.add(a)
            cuts.add(b)
    pts = sorted(cuts)
    segs: list[Segment] = []
    for a, b in zip(pts, pts[1:]):
        mid = 0.5 * (a + b)
        label = sum(1 for ivs in covers if any(x < mid < y for x, y in ivs))
        if segs and segs[-1].label == label:
            segs[-1] = Segment(segs[-1].lo, b, label)
        else:
            segs.append(Segment(a, b, label))
    if not segs:
        segs = [Segment(float(lo), float(hi), 0)]
    if segs[0].label != 0:
        segs.insert(0, Segment(float(lo), float(lo), 0))
    if segs[-1].label != 0:
        segs.append(Segment(float(hi), float(hi), 0))
    return ProjectionSequence(feature_id or "", axis, lo, hi, tuple(segs), index)


def _inner_position(seg: Segment, lo: int, hi: int):
    """Integer coordinate near the segment midpoint, strictly inside both ranges."""
    mid = 0.5 * (seg.lo + seg.hi)
    for p in (round(mid), math.floor(mid), math.ceil(mid)):
        if seg.lo < p < seg.hi and lo < p < hi:
            return int(p)
    return None


def redundant_segments(labels: Sequence[int]) -> set[int]:
    """Segment indices whose DPL candidate is redundant under the 01010 rule."""
    pattern = [0, 1, 0, 1, 0]
    out = set()
    if len(labels) >= 5 and list(labels[:5]) == pattern:
        out.add(2)
    if len(labels) >= 5 and list(labels[-5:]) == pattern:
        out.add(len(labels) - 3)
    return out


def lost_segments(labels: Sequence[int]) -> list[int]:
    """One valley segment per sequence bunch (>= 3 consecutive non-zero labels)."""
    out = []
    i = 0
    n = len(labels)
    while i < n:
        if labels[i] == 0:
            i += 1
            continue
        j = i
        while j < n and labels[j] > 0:
            j += 1
        if j - i >= 3:
            valleys = [k for k in range(i + 1, j - 1)
                       if labels[k - 1] > labels[k] < labels[k + 1]]
            if valleys:
                out.append(min(valleys, key=lambda k: (labels[k], k)))
        i = j
    return out


def generate_stitch_candidates(ps: ProjectionSequence, max_stitch: int | None = None,
                               forbidden: Sequence[tuple[float, float]] = ()) -> list[StitchCandidate]:
    """DPL candidates in interior zero segments, minus redundant ones, plus lost stitches.

    ``forbidden`` lists closed axis intervals (junctions) where no stitch may go.
    """
    labels = ps.labels
    drop = redundant_segments(labels)
    picks = []
    for i in range(1, len(labels) - 1):
        if labels[i] == 0 and i not in drop:
            picks.append((i, "dpl"))
    picks.extend((i, "lost") for i in lost_segments(labels))
    out = []
    for i, kind in sorted(picks):
        pos = _inner_position(ps.segments[i], ps.lo, ps.hi)
        if pos is None or any(a <= pos <= b for a, b in forbidden):
            continue
        out.append(StitchCandidate(ps.feature, pos, kind, ps.axis, ps.sub))
    if max_stitch is not None:
        out = out[:max_stitch]
    return out


def junction_zones(runs: Sequence[SubFeature], sub: SubFeature):
    zones = []
    for other in runs:
        if other.index != sub.index and (touching(other.rect, sub.rect)
                                         or _corner_touch(other.rect, sub.rect)):
            zones.append(_axis_extent(other.rect, sub.axis))
    return zones


def _corner_touch(a: Rect, b: Rect) -> bool:
    return (min(a.x1, b.x1) >= max(a.x0, b.x0)) and (min(a.y1, b.y1) >= max(a.y0, b.y0))


def feature_candidates(feature: Feature, neighbors: Iterable[Sequence[Rect]], dis_m: float,
                       max_stitch: int | None = 4):
    """Projection sequences and stitch candidates for every run of one feature."""
    neighbors = [list(g) for g in neighbors]
    runs = decompose_multipin(feature)
    seqs = []
    cands = []
    for run in runs:
        ps = compute_projection_sequence(run, neighbors, dis_m)
        seqs.append(ps)
        cands.extend(generate_stitch_candidates(ps, forbidden=junction_zones(runs, run)))
    if max_stitch is not None:
        cands = cands[:max_stitch]
    return seqs, cands


def forbid_cut_vertex_stitches(candidates, cut_vertices):
    cut_vertices = set(cut_vertices)
    return [c for c in candidates if c.feature not in cut_vertices]


def dump_sequences(seqs: Iterable[ProjectionSequence]) -> str:
    lines = []
    for ps in seqs:
        tag = ps.feature if ps.sub == 0 else f"{ps.feature}#{ps.sub}"
        lines.append(f"{tag}: {ps}")
    return "\n".join(lines) + ("\n" if lines else "")
