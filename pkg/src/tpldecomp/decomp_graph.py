"""Decomposition graph over feature fragments, vertex clustering and the fast coloring trial."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .geometry import DensityGrid, Feature, Rect, disjoint_pieces, fragment_bin_density, geometry_dist_sq, touching
from .stitch import HORIZONTAL, decompose_multipin

Key = tuple  # (feature id, fragment index)


@dataclass(frozen=True)
class Fragment:
    feature: str
    index: int
    rects: tuple[Rect, ...]
    density: tuple[tuple[int, float], ...] = ()

    @property
    def key(self):
        return (self.feature, self.index)

    @property
    def area(self):
        return sum(r.area for r in self.rects)


def _pair(u, v):
    return (u, v) if u <= v else (v, u)


@dataclass
class DecompositionGraph:
    """Fragments plus weighted conflict and stitch edges.

    Vertices are representative keys. Edge maps hold multiplicities, since
    clustering can fold several fragment edges onto one vertex pair.
    """

    vertices: list
    conflict: dict = field(default_factory=dict)
    stitch: dict = field(default_factory=dict)
    density: dict = field(default_factory=dict)
    members: dict = field(default_factory=dict)
    fragments: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in self.vertices:
            self.members.setdefault(v, (v,))
            self.density.setdefault(v, {})

    @classmethod
    def from_edges(cls, n, conflict_edges=(), stitch_edges=(), densities=None):
        """Abstract graph on vertices 0..n-1, mainly for tests and oracles."""
        g = cls(list(range(n)))
        for u, v in conflict_edges:
            g.add_conflict(u, v)
        for u, v in stitch_edges:
            g.add_stitch(u, v)
        if densities is not None:
            for v, d in enumerate(densities):
                g.density[v] = {k: float(x) for k, x in enumerate(d) if x}
        return g

    @property
    def cluster_map(self) -> dict:
        return {m: rep for rep, ms in self.members.items() for m in ms}

    def add_conflict(self, u, v, w=1):
        if u == v:
            return
        p = _pair(u, v)
        self.conflict[p] = self.conflict.get(p, 0) + w

    def add_stitch(self, u, v, w=1):
        if u == v:
            return
        p = _pair(u, v)
        self.stitch[p] = self.stitch.get(p, 0) + w

    def neighbors(self):
        conf = defaultdict(dict)
        stit = defaultdict(dict)
        for (u, v), w in self.conflict.items():
            conf[u][v] = w
            conf[v][u] = w
        for (u, v), w in self.stitch.items():
            stit[u][v] = w
            stit[v][u] = w
        return conf, stit

    def subgraph(self, keep) -> "DecompositionGraph":
        keep = set(keep)
        g = DecompositionGraph(
            [v for v in self.vertices if v in keep],
            {p: w for p, w in self.conflict.items() if p[0] in keep and p[1] in keep},
            {p: w for p, w in self.stitch.items() if p[0] in keep and p[1] in keep},
            {v: self.density[v] for v in keep},
            {v: self.members[v] for v in keep},
        )
        g.fragments = {m: f for m, f in self.fragments.items() if g.cluster_map.get(m) is not None}
        return g

    def expand(self, coloring: dict) -> dict:
        """Map a coloring of representatives onto the underlying fragments."""
        return {m: coloring[rep] for rep, ms in self.members.items() for m in ms}

    def __len__(self):
        return len(self.vertices)


def split_feature(feature: Feature, positions: dict[int, list[int]]):
    """Cut a feature at stitch positions.

    ``positions`` maps run index to axis coordinates. Returns the fragment
    geometries (ordered by lower-left corner) and the stitch edges between
    fragment indices.
    """
    runs = decompose_multipin(feature)
    pieces = []
    for rect, tag in disjoint_pieces([r.rect for r in runs]):
        cuts = sorted(set(positions.get(tag, ())))
        horizontal = runs[tag].axis == HORIZONTAL
        parts = [rect]
        for p in cuts:
            nxt = []
            for r in parts:
                lo, hi = (r.x0, r.x1) if horizontal else (r.y0, r.y1)
                if lo < p < hi:
                    if horizontal:
                        nxt += [Rect(r.x0, r.y0, p, r.y1), Rect(p, r.y0, r.x1, r.y1)]
                    else:
                        nxt += [Rect(r.x0, r.y0, r.x1, p), Rect(r.x0, p, r.x1, r.y1)]
                else:
                    nxt.append(r)
            parts = nxt
        pieces.extend((r, tag) for r in parts)

    def across_cut(a, b, tag):
        cuts = positions.get(tag, ())
        if runs[tag].axis == HORIZONTAL:
            return any((a.x1 == p == b.x0 or b.x1 == p == a.x0) for p in cuts)
        return any((a.y1 == p == b.y0 or b.y1 == p == a.y0) for p in cuts)

    parent = list(range(len(pieces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    stitched = []
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            (a, ta), (b, tb) = pieces[i], pieces[j]
            if not touching(a, b):
                continue
            if ta == tb and across_cut(a, b, ta):
                stitched.append((i, j))
            else:
                parent[find(i)] = find(j)
    groups = defaultdict(list)
    for i in range(len(pieces)):
        groups[find(i)].append(i)
    ordered = sorted(groups.values(), key=lambda idx: min((pieces[i][0].x0, pieces[i][0].y0) for i in idx))
    frag_of = {}
    geoms = []
    for fi, idx in enumerate(ordered):
        for i in idx:
            frag_of[i] = fi
        geoms.append(tuple(sorted(pieces[i][0] for i in idx)))
    edges = sorted({_pair(frag_of[i], frag_of[j]) for i, j in stitched if frag_of[i] != frag_of[j]})
    return geoms, edges


def make_fragments(feature: Feature, candidates, grid: DensityGrid | None):
    positions = defaultdict(list)
    for c in candidates:
        positions[c.sub].append(c.position)
    geoms, edges = split_feature(feature, positions)
    frags = []
    for i, rects in enumerate(geoms):
        den = tuple(fragment_bin_density(rects, grid).items()) if grid is not None else ()
        frags.append(Fragment(feature.id, i, rects, den))
    return frags, [((feature.id, i), (feature.id, j)) for i, j in edges]


def build_decomposition_graph(layout_graph, features: dict, candidates, grid, dis_m) -> DecompositionGraph:
    """Fragments for every vertex of ``layout_graph`` and fragment-level edges.

    Conflict edges are recomputed geometrically, but only for feature pairs
    adjacent in ``layout_graph``. ``candidates`` maps feature id to its
    (already filtered) stitch candidates.
    """
    frags = {}
    stitch_edges = []
    by_feature = {}
    for fid in layout_graph.vertices:
        fs, es = make_fragments(features[fid], candidates.get(fid, ()), grid)
        by_feature[fid] = fs
        stitch_edges.extend(es)
        for f in fs:
            frags[f.key] = f
    g = DecompositionGraph(sorted(frags), fragments=frags)
    for k, f in frags.items():
        g.density[k] = dict(f.density)
    limit = dis_m * dis_m
    for u, v in layout_graph.conflict_edges:
        for fu in by_feature[u]:
            for fv in by_feature[v]:
                if geometry_dist_sq(fu.rects, fv.rects) < limit:
                    g.add_conflict(fu.key, fv.key)
    for a, b in stitch_edges:
        g.add_stitch(a, b)
    return g


def _merge_density(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + v
    return out


def cluster_vertices(g: DecompositionGraph, alpha: float = 0.1) -> DecompositionGraph:
    """Fold together vertices with identical conflict neighborhoods.

    A pair is merged only when no conflict edge joins them and forcing equal
    colors cannot raise the conflict+stitch cost: either their stitch
    neighborhoods (apart from each other) agree, or one side has none and the
    other's stitch weight stays below one conflict.
    """
    g = DecompositionGraph(list(g.vertices), dict(g.conflict), dict(g.stitch),
                           dict(g.density), dict(g.members), dict(g.fragments))
    while True:
        conf, stit = g.neighbors()
        buckets = defaultdict(list)
        for v in g.vertices:
            buckets[frozenset(conf[v].items())].append(v)
        merged = False
        for key in sorted(buckets, key=lambda k: min(buckets[k])):
            group = sorted(buckets[key])
            for i in range(len(group)):
                for j in range(i + 1, len(group)):
                    u, v = group[i], group[j]
                    su = {x: w for x, w in stit[u].items() if x != v}
                    sv = {x: w for x, w in stit[v].items() if x != u}
                    ok = su == sv or (not su and alpha * sum(sv.values()) < 1) \
                        or (not sv and alpha * sum(su.values()) < 1)
                    if ok:
                        _fold(g, u, v)
                        merged = True
                        break
                if merged:
                    break
            if merged:
                break
        if not merged:
            return g


def _fold(g: DecompositionGraph, u, v):
    """Merge v into u (u < v)."""
    g.vertices.remove(v)
    g.members[u] = tuple(sorted(g.members[u] + g.members.pop(v)))
    g.density[u] = _merge_density(g.density[u], g.density.pop(v))
    for edges in (g.conflict, g.stitch):
        for (a, b), w in list(edges.items()):
            if v not in (a, b):
                continue
            del edges[(a, b)]
            other = b if a == v else a
            if other == u:
                continue
            p = _pair(u, other)
            edges[p] = edges.get(p, 0) + w


class TrialInvariantError(AssertionError):
    pass


def fast_color_trial(g: DecompositionGraph):
    """Peel vertices with conflict degree < 3 and stitch degree < 2, then color in reverse.

    Returns a zero-conflict, zero-stitch coloring or ``None``. Popping a vertex
    whose colored neighbors leave no cost-free color also yields ``None``.
    """
    conf, stit = g.neighbors()
    cdeg = {v: len(conf[v]) for v in g.vertices}
    sdeg = {v: len(stit[v]) for v in g.vertices}
    alive = set(g.vertices)
    stack = []
    changed = True
    while changed:
        changed = False
        for v in g.vertices:
            if v in alive and cdeg[v] < 3 and sdeg[v] < 2:
                alive.discard(v)
                stack.append(v)
                for w in conf[v]:
                    cdeg[w] -= 1
                for w in stit[v]:
                    sdeg[w] -= 1
                changed = True
    if alive:
        return None
    color = {}
    for v in reversed(stack):
        banned = {color[w] for w in conf[v] if w in color}
        tied = {color[w] for w in stit[v] if w in color}
        if len(tied) > 1:
            return None
        options = [c for c in range(3) if c not in banned and (not tied or c in tied)]
        if not options:
            return None
        color[v] = options[0]
    return color
