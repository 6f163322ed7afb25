"""Feature conflict graph and the graph simplifications applied to it."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

from .geometry import LayoutSpec, geometry_dist_sq


@dataclass
class LayoutGraph:
    vertices: list[str]
    adj: dict[str, set[str]]
    removal_stack: list[tuple[str, frozenset[str]]] = field(default_factory=list)

    @classmethod
    def from_edges(cls, vertices, edges):
        vertices = list(vertices)
        adj = {v: set() for v in vertices}
        for u, v in edges:
            if u == v:
                continue
            adj[u].add(v)
            adj[v].add(u)
        return cls(vertices, adj)

    @property
    def conflict_edges(self) -> list[tuple[str, str]]:
        order = {v: i for i, v in enumerate(self.vertices)}
        out = []
        for u in self.vertices:
            for v in self.adj[u]:
                if order[u] < order[v]:
                    out.append((u, v))
        return sorted(out, key=lambda e: (order[e[0]], order[e[1]]))

    def degree(self, v) -> int:
        return len(self.adj[v])

    def induced(self, keep) -> "LayoutGraph":
        keep = set(keep)
        verts = [v for v in self.vertices if v in keep]
        return LayoutGraph(verts, {v: self.adj[v] & keep for v in verts})

    def __len__(self):
        return len(self.vertices)


def build_layout_graph(spec: LayoutSpec, dis_m: int) -> LayoutGraph:
    """Conflict edges between features closer than ``dis_m`` (strict).

    Candidate pairs come from a uniform spatial hash with cell size ``dis_m``.
    """
    cells: dict[tuple[int, int], list[int]] = defaultdict(list)
    feats = spec.features
    boxes = [f.bbox for f in feats]
    for i, b in enumerate(boxes):
        for cx in range(b.x0 // dis_m, b.x1 // dis_m + 1):
            for cy in range(b.y0 // dis_m, b.y1 // dis_m + 1):
                cells[(cx, cy)].append(i)
    limit = dis_m * dis_m
    edges = set()
    for i, b in enumerate(boxes):
        cand = set()
        for cx in range((b.x0 - dis_m) // dis_m, (b.x1 + dis_m) // dis_m + 1):
            for cy in range((b.y0 - dis_m) // dis_m, (b.y1 + dis_m) // dis_m + 1):
                cand.update(j for j in cells.get((cx, cy), ()) if j > i)
        for j in sorted(cand):
            if geometry_dist_sq(feats[i].pieces, feats[j].pieces) < limit:
                edges.add((feats[i].id, feats[j].id))
    return LayoutGraph.from_edges([f.id for f in feats], sorted(edges))


def split_independent_components(g: LayoutGraph) -> list[LayoutGraph]:
    seen = set()
    comps = []
    for s in g.vertices:
        if s in seen:
            continue
        seen.add(s)
        queue = deque([s])
        members = set()
        while queue:
            u = queue.popleft()
            members.add(u)
            for w in g.adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append(g.induced(members))
    return comps


def simplify_low_degree(g: LayoutGraph, max_degree: int = 2):
    """Peel vertices of degree <= ``max_degree`` until none is left.

    Returns ``(core, stack)``; each stack entry is ``(vertex, neighbors at
    removal time)``.
    """
    adj = {v: set(g.adj[v]) for v in g.vertices}
    alive = set(g.vertices)
    order = {v: i for i, v in enumerate(g.vertices)}
    queue = deque(v for v in g.vertices if len(adj[v]) <= max_degree)
    queued = set(queue)
    stack = []
    while queue:
        v = queue.popleft()
        nbrs = frozenset(adj[v])
        assert len(nbrs) <= max_degree
        stack.append((v, nbrs))
        alive.discard(v)
        for w in sorted(nbrs, key=order.__getitem__):
            adj[w].discard(v)
            if w not in queued and len(adj[w]) <= max_degree:
                queued.add(w)
                queue.append(w)
        adj[v] = set()
    core = g.induced(alive)
    core.removal_stack = list(g.removal_stack) + stack
    return core, stack


def _dfs_lowlink(g: LayoutGraph):
    """Iterative Hopcroft-Tarjan DFS. Yields cut vertices and edge-sets of blocks."""
    disc: dict[str, int] = {}
    low: dict[str, int] = {}
    cuts = set()
    blocks = []
    counter = 0
    order = {v: i for i, v in enumerate(g.vertices)}
    for root in g.vertices:
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        root_children = 0
        estack = []
        stack = [(root, None, iter(sorted(g.adj[root], key=order.__getitem__)))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if w not in disc:
                    disc[w] = low[w] = counter
                    counter += 1
                    estack.append((u, w))
                    stack.append((w, u, iter(sorted(g.adj[w], key=order.__getitem__))))
                    advanced = True
                    break
                if disc[w] < disc[u]:
                    estack.append((u, w))
                    low[u] = min(low[u], disc[w])
            if advanced:
                continue
            stack.pop()
            if parent is None:
                continue
            low[parent] = min(low[parent], low[u])
            if low[u] >= disc[parent]:
                if stack[-1][1] is None:
                    root_children += 1
                else:
                    cuts.add(parent)
                block = []
                while True:
                    e = estack.pop()
                    block.append(e)
                    if e == (parent, u):
                        break
                blocks.append(block)
        if root_children > 1:
            cuts.add(root)
    return cuts, blocks


def find_cut_vertices(g: LayoutGraph) -> set[str]:
    return _dfs_lowlink(g)[0]


@dataclass
class BlockTree:
    """Biconnected blocks plus the joins (block_i, block_j, shared vertex).

    Joins form a forest: a cut vertex shared by k blocks contributes k-1 joins.
    """

    blocks: list[LayoutGraph]
    joins: list[tuple[int, int, str]]


def split_biconnected(g: LayoutGraph) -> BlockTree:
    _, edge_blocks = _dfs_lowlink(g)
    order = {v: i for i, v in enumerate(g.vertices)}
    blocks = []
    for eb in edge_blocks:
        verts = sorted({v for e in eb for v in e}, key=order.__getitem__)
        blocks.append(LayoutGraph.from_edges(verts, eb))
    # isolated vertices form their own trivial block
    covered = {v for b in blocks for v in b.vertices}
    for v in g.vertices:
        if v not in covered:
            blocks.append(LayoutGraph([v], {v: set()}))
    blocks.sort(key=lambda b: min(order[v] for v in b.vertices))
    owner: dict[str, list[int]] = defaultdict(list)
    for i, b in enumerate(blocks):
        for v in b.vertices:
            owner[v].append(i)
    joins = []
    for v in g.vertices:
        bs = owner[v]
        for j in bs[1:]:
            joins.append((bs[0], j, v))
    return BlockTree(blocks, joins)


def dump_edge_list(g: LayoutGraph) -> str:
    """Edge-list debug form: header ``<n_vertices> <n_edges>``, then ``u v`` lines."""
    edges = g.conflict_edges
    lines = [f"{len(g.vertices)} {len(edges)}"]
    lines.extend(f"{u} {v}" for u, v in edges)
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> LayoutGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n, m = (int(t) for t in lines[0].split())
    edges = [tuple(ln.split()) for ln in lines[1:1 + m]]
    verts = []
    for u, v in edges:
        for x in (u, v):
            if x not in verts:
                verts.append(x)
    if len(verts) > n:
        raise ValueError("edge list references more vertices than declared")
    return LayoutGraph.from_edges(verts, edges)
