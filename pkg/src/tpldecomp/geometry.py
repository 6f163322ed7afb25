"""Layout parsing, rectangle arithmetic and per-bin density bookkeeping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

FORMAT_KEYS = ("units", "w_min", "s_min", "dis_m", "features")


class LayoutError(ValueError):
    """Raised for malformed layout input. ``position`` is (line, column) when known."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (line {position[0]}, column {position[1]})"
        super().__init__(message)
        self.position = position


class Rect(NamedTuple):
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)


def intersect(a: Rect, b: Rect) -> Rect | None:
    x0, y0 = max(a.x0, b.x0), max(a.y0, b.y0)
    x1, y1 = min(a.x1, b.x1), min(a.y1, b.y1)
    if x0 < x1 and y0 < y1:
        return Rect(x0, y0, x1, y1)
    return None


def subtract(a: Rect, b: Rect) -> list[Rect]:
    """Return ``a - b`` as up to four disjoint rectangles."""
    cut = intersect(a, b)
    if cut is None:
        return [a]
    out = []
    if a.y0 < cut.y0:
        out.append(Rect(a.x0, a.y0, a.x1, cut.y0))
    if cut.y1 < a.y1:
        out.append(Rect(a.x0, cut.y1, a.x1, a.y1))
    if a.x0 < cut.x0:
        out.append(Rect(a.x0, cut.y0, cut.x0, cut.y1))
    if cut.x1 < a.x1:
        out.append(Rect(cut.x1, cut.y0, a.x1, cut.y1))
    return out


def disjoint_pieces(rects: Iterable[Rect]) -> list[tuple[Rect, int]]:
    """Split overlapping rectangles into disjoint pieces.

    Each piece is tagged with the index of the input rectangle that claimed it
    (earlier rectangles win overlaps).
    """
    pieces: list[tuple[Rect, int]] = []
    for idx, r in enumerate(rects):
        parts = [r]
        for prev, _ in pieces:
            nxt = []
            for p in parts:
                nxt.extend(subtract(p, prev))
            parts = nxt
            if not parts:
                break
        pieces.extend((p, idx) for p in parts)
    return pieces


def rect_dist_sq(a: Rect, b: Rect) -> int:
    """Squared Euclidean distance between two closed rectangles (exact for ints)."""
    dx = max(0, b.x0 - a.x1, a.x0 - b.x1)
    dy = max(0, b.y0 - a.y1, a.y0 - b.y1)
    return dx * dx + dy * dy


def geometry_dist_sq(rs: Iterable[Rect], qs: Iterable[Rect]) -> int:
    qs = list(qs)
    return min(rect_dist_sq(r, q) for r in rs for q in qs)


def touching(a: Rect, b: Rect) -> bool:
    """True if the rectangles overlap or share a boundary segment of positive length."""
    ox = min(a.x1, b.x1) - max(a.x0, b.x0)
    oy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ox > 0 and oy > 0:
        return True
    return (ox == 0 and oy > 0) or (oy == 0 and ox > 0)


def bbox(rects: Iterable[Rect]) -> Rect:
    rects = list(rects)
    return Rect(min(r.x0 for r in rects), min(r.y0 for r in rects),
                max(r.x1 for r in rects), max(r.y1 for r in rects))


def _connected(rects: list[Rect]) -> bool:
    seen = {0}
    todo = [0]
    while todo:
        i = todo.pop()
        for j in range(len(rects)):
            if j not in seen and touching(rects[i], rects[j]):
                seen.add(j)
                todo.append(j)
    return len(seen) == len(rects)


@dataclass(frozen=True)
class Feature:
    id: str
    rects: tuple[Rect, ...]

    @cached_property
    def pieces(self) -> tuple[Rect, ...]:
        return tuple(p for p, _ in disjoint_pieces(self.rects))

    @property
    def area(self) -> int:
        return sum(p.area for p in self.pieces)

    @property
    def bbox(self) -> Rect:
        return bbox(self.rects)


@dataclass(frozen=True)
class LayoutSpec:
    units: str = "nm"
    w_min: int | None = None
    s_min: int | None = None
    dis_m: int | None = None
    features: tuple[Feature, ...] = ()

    def feature(self, fid: str) -> Feature:
        return self.by_id[fid]

    @cached_property
    def by_id(self) -> dict[str, Feature]:
        return {f.id: f for f in self.features}


def _require_int(value, what, position=None, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise LayoutError(f"{what} must be an integer, got {value!r}", position)
    if isinstance(value, float):
        if not value.is_integer():
            raise LayoutError(f"{what} must be an integer nanometer value, got {value!r}", position)
        value = int(value)
    if positive and value <= 0:
        raise LayoutError(f"{what} must be positive, got {value}", position)
    return value


def validate_layout(spec: LayoutSpec) -> LayoutSpec:
    if spec.units != "nm":
        raise LayoutError(f"units must be 'nm', got {spec.units!r}")
    if spec.dis_m is None and (spec.w_min is None or spec.s_min is None):
        raise LayoutError("missing process parameters: need dis_m or both w_min and s_min")
    for name in ("w_min", "s_min", "dis_m"):
        v = getattr(spec, name)
        if v is not None:
            _require_int(v, name, positive=True)
    seen = set()
    for f in spec.features:
        if not isinstance(f.id, str) or not f.id:
            raise LayoutError("feature id must be a non-empty string")
        if f.id in seen:
            raise LayoutError(f"duplicate feature id {f.id!r}")
        seen.add(f.id)
        if not f.rects:
            raise LayoutError(f"feature {f.id!r} has no rectangles")
        for r in f.rects:
            if not (r.x0 < r.x1 and r.y0 < r.y1):
                raise LayoutError(f"degenerate rectangle {list(r)} in feature {f.id!r}")
        if not _connected(list(f.rects)):
            raise LayoutError(f"rectangles of feature {f.id!r} are not connected")
    return spec


def parse_layout(text: str) -> LayoutSpec:
    """Parse the JSON layout format into a validated :class:`LayoutSpec`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutError(f"syntax error: {exc.msg}", (exc.lineno, exc.colno)) from None
    if not isinstance(doc, dict):
        raise LayoutError("top level must be an object")
    unknown = sorted(set(doc) - set(FORMAT_KEYS))
    if unknown:
        raise LayoutError(f"unknown top-level field(s): {', '.join(unknown)}")
    feats = doc.get("features", [])
    if not isinstance(feats, list):
        raise LayoutError("'features' must be an array")
    features = []
    for i, entry in enumerate(feats):
        if not isinstance(entry, dict) or set(entry) != {"id", "rects"}:
            raise LayoutError(f"features[{i}] must be an object with exactly 'id' and 'rects'")
        if not isinstance(entry["rects"], list):
            raise LayoutError(f"features[{i}].rects must be an array")
        rects = []
        for j, r in enumerate(entry["rects"]):
            if not isinstance(r, list) or len(r) != 4:
                raise LayoutError(f"features[{i}].rects[{j}] must be [x0, y0, x1, y1]")
            rects.append(Rect(*(_require_int(v, f"features[{i}].rects[{j}]") for v in r)))
        features.append(Feature(entry["id"], tuple(rects)))
    params = {}
    for name in ("w_min", "s_min", "dis_m"):
        if doc.get(name) is not None:
            params[name] = _require_int(doc[name], name, positive=True)
    spec = LayoutSpec(units=doc.get("units", "nm"), features=tuple(features), **params)
    return validate_layout(spec)


def render_layout(spec: LayoutSpec) -> str:
    """Canonical text form; ``parse_layout(render_layout(s)) == s``."""
    lines = ["{", f'  "units": {json.dumps(spec.units)},']
    for name in ("w_min", "s_min", "dis_m"):
        v = getattr(spec, name)
        if v is not None:
            lines.append(f'  "{name}": {v},')
    if not spec.features:
        lines.append('  "features": []')
    else:
        lines.append('  "features": [')
        for i, f in enumerate(spec.features):
            rects = ", ".join(json.dumps(list(r)) for r in f.rects)
            tail = "," if i < len(spec.features) - 1 else ""
            lines.append(f'    {{"id": {json.dumps(f.id)}, "rects": [{rects}]}}{tail}')
        lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_layout(path) -> LayoutSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(fh.read())


def min_coloring_distance(spec: LayoutSpec) -> int:
    if spec.dis_m is not None:
        return spec.dis_m
    return 2 * spec.w_min + 3 * spec.s_min


class Bin(NamedTuple):
    index: int
    x0: float
    y0: float
    x1: float
    y1: float


@dataclass
class DensityGrid:
    """Sliding square bins anchored at the layout's lower-left corner.

    The bin lattice has origin ``(ox, oy)`` and step ``stride``; every lattice
    window of side ``bin_side`` with a positive-area intersection with the
    layout bounding box is a bin. ``den`` holds per-feature normalized areas.
    """

    bin_side: float
    stride: float
    ox: float = 0.0
    oy: float = 0.0
    ix_min: int = 0
    iy_min: int = 0
    nx: int = 0
    ny: int = 0
    den: dict[tuple[str, int], float] = field(default_factory=dict)

    @property
    def bin_area(self) -> float:
        return self.bin_side * self.bin_side

    @property
    def n_bins(self) -> int:
        return self.nx * self.ny

    def bin(self, k: int) -> Bin:
        iy, ix = divmod(k, self.nx)
        x0 = self.ox + (ix + self.ix_min) * self.stride
        y0 = self.oy + (iy + self.iy_min) * self.stride
        return Bin(k, x0, y0, x0 + self.bin_side, y0 + self.bin_side)

    @property
    def bins(self) -> list[Bin]:
        return [self.bin(k) for k in range(self.n_bins)]

    def _axis_range(self, lo, hi, origin, imin, n):
        # lattice indices i with (origin + i*stride, +bin_side) overlapping (lo, hi)
        first = math.floor((lo - self.bin_side - origin) / self.stride) + 1
        last = math.ceil((hi - origin) / self.stride) - 1
        first = max(first, imin)
        last = min(last, imin + n - 1)
        return range(first - imin, last - imin + 1)

    def bins_overlapping(self, r: Rect) -> list[int]:
        if self.n_bins == 0:
            return []
        xs = self._axis_range(r.x0, r.x1, self.ox, self.ix_min, self.nx)
        ys = self._axis_range(r.y0, r.y1, self.oy, self.iy_min, self.ny)
        return [iy * self.nx + ix for iy in ys for ix in xs]


def _overlap_area(r: Rect, b: Bin) -> float:
    w = min(r.x1, b.x1) - max(r.x0, b.x0)
    h = min(r.y1, b.y1) - max(r.y0, b.y0)
    if w <= 0 or h <= 0:
        return 0.0
    return float(w) * float(h)


def fragment_bin_density(rects: Iterable[Rect], grid: DensityGrid) -> dict[int, float]:
    """Normalized covered area per bin for a set of disjoint rectangles.

    Only bins with a positive entry are returned (sparse vector).
    """
    out: dict[int, float] = {}
    area = grid.bin_area
    for r in rects:
        for k in grid.bins_overlapping(r):
            a = _overlap_area(r, grid.bin(k))
            if a > 0:
                out[k] = out.get(k, 0.0) + a / area
    return dict(sorted(out.items()))


def dense_vector(den: dict[int, float], n_bins: int):
    import numpy as np

    v = np.zeros(n_bins)
    for k, val in den.items():
        v[k] = val
    return v


def build_density_grid(spec: LayoutSpec, bin_factor: float = 10.0, overlap: float = 0.5) -> DensityGrid:
    if bin_factor <= 0:
        raise ValueError("bin_factor must be positive")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must be in [0, 1)")
    side = bin_factor * min_coloring_distance(spec)
    stride = side * (1.0 - overlap)
    grid = DensityGrid(bin_side=side, stride=stride)
    if not spec.features:
        return grid
    box = bbox(r for f in spec.features for r in f.rects)
    grid.ox, grid.oy = float(box.x0), float(box.y0)
    back = math.ceil(side / stride) - 1
    grid.ix_min = grid.iy_min = -back
    grid.nx = math.ceil((box.x1 - box.x0) / stride) + back
    grid.ny = math.ceil((box.y1 - box.y0) / stride) + back
    for f in spec.features:
        for k, v in fragment_bin_density(f.pieces, grid).items():
            grid.den[(f.id, k)] = v
    return grid
