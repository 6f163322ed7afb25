"""Rounding an SDP solution to three masks: threshold merging, then a three-way max-cut."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from .decomp_graph import DecompositionGraph
from .metrics import EPS, du_sum


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return ra


class MergeState:
    """Disjoint sets of vertex indices plus pairs of sets that must differ."""

    def __init__(self, n: int):
        self.uf = UnionFind(n)
        self.n = n
        self.incompatible: set[frozenset] = set()
        self.tensions: list[tuple[int, int, str]] = []

    def find(self, i):
        return self.uf.find(i)

    def compatible(self, i, j) -> bool:
        return frozenset((self.find(i), self.find(j))) not in self.incompatible

    def union(self, i, j) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return True
        if frozenset((ri, rj)) in self.incompatible:
            self.tensions.append((i, j, "union"))
            return False
        root = self.uf.union(ri, rj)
        gone = rj if root == ri else ri
        fixed = set()
        for p in self.incompatible:
            if gone in p:
                (other,) = p - {gone}
                fixed.add(frozenset((root, other)))
            else:
                fixed.add(p)
        self.incompatible = fixed
        return True

    def separate(self, i, j) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            self.tensions.append((i, j, "separate"))
            return False
        self.incompatible.add(frozenset((ri, rj)))
        return True

    def groups(self) -> list[tuple[int, ...]]:
        out = {}
        for i in range(self.n):
            out.setdefault(self.find(i), []).append(i)
        return sorted((tuple(m) for m in out.values()), key=lambda m: m[0])


def threshold_merge(X, g: DecompositionGraph | None = None, th_unn: float = 0.9,
                    th_sp: float = -0.4) -> MergeState:
    """Union pairs with X_ij > th_unn and separate pairs with X_ij < th_sp.

    Pairs are visited in descending X order (ties by (i, j)), so every union
    happens before any separation.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if g is not None and len(g.vertices) != n:
        raise ValueError(f"X is {n}x{n} but the graph has {len(g.vertices)} vertices")
    ms = MergeState(n)
    if n < 2:
        return ms
    iu, ju = np.triu_indices(n, 1)
    vals = X[iu, ju]
    order = np.lexsort((ju, iu, -vals))
    for t in order:
        x, i, j = vals[t], int(iu[t]), int(ju[t])
        if x > th_unn:
            ms.union(i, j)
        elif x < th_sp:
            ms.separate(i, j)
    return ms


@dataclass
class MappingGraph:
    members: list            # tuple of vertex indices per node
    density: list            # {bin: value} per node
    weight: list             # total density per node
    edges: dict              # (a, b) with a < b -> weight of putting a and b on one mask
    incompatible: set = field(default_factory=set)   # (a, b) with a < b

    def __len__(self):
        return len(self.members)

    def adjacency(self):
        adj = [dict() for _ in self.members]
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def cut_value(self, parts) -> float:
        return float(sum(w for (a, b), w in self.edges.items() if parts[a] != parts[b]))

    def violations(self, parts) -> int:
        return sum(1 for a, b in self.incompatible if parts[a] == parts[b])

    def balance(self, parts) -> float:
        return balance_score(self.density, parts)


def balance_score(densities, parts) -> float:
    bins = sorted({k for d in densities for k in d})
    if not bins:
        return 0.0
    pos = {k: i for i, k in enumerate(bins)}
    d = np.zeros((len(bins), 3))
    for den, p in zip(densities, parts):
        for k, x in den.items():
            d[pos[k], p] += x
    return du_sum(d, EPS)


def build_mapping_graph(ms: MergeState, g: DecompositionGraph, X=None, alpha: float = 0.1,
                        kappa: float = 1.0) -> MappingGraph:
    groups = ms.groups()
    node_of = {}
    for a, mem in enumerate(groups):
        for i in mem:
            node_of[i] = a
    idx = {v: i for i, v in enumerate(g.vertices)}
    dens, weights = [], []
    for mem in groups:
        d = {}
        for i in mem:
            for k, x in g.density.get(g.vertices[i], {}).items():
                d[k] = d.get(k, 0.0) + x
        dens.append(dict(sorted(d.items())))
        weights.append(float(sum(d.values())))
    edges: dict = {}

    def bump(a, b, w):
        if a == b:
            return
        p = (a, b) if a < b else (b, a)
        edges[p] = edges.get(p, 0.0) + w

    for (u, v), w in g.conflict.items():
        bump(node_of[idx[u]], node_of[idx[v]], float(w))
    for (u, v), w in g.stitch.items():
        bump(node_of[idx[u]], node_of[idx[v]], -alpha * w)
    if X is not None and kappa:
        X = np.asarray(X, dtype=float)
        labels = np.array([node_of[i] for i in range(len(g.vertices))])
        m = len(groups)
        agg = np.zeros((m, m))
        np.add.at(agg, (labels[:, None], labels[None, :]), 0.5 - X)
        for a in range(m):
            for b in range(a + 1, m):
                if agg[a, b]:
                    bump(a, b, kappa * float(agg[a, b]))
    edges = {p: w for p, w in sorted(edges.items())}
    inc = set()
    for p in ms.incompatible:
        a, b = sorted(node_of[r] for r in p)
        inc.add((a, b))
    return MappingGraph(list(groups), dens, weights, edges, inc)


def backtrack_threeway(gm: MappingGraph, use_balance: bool = True, tol: float = 1e-9):
    """Exhaustive three-way partition maximizing the cut weight.

    Node 0 is pinned to part 0 and a new part index is opened only in order,
    so each partition is visited once up to part relabeling. Incompatible
    pairs must be cut; if that is impossible, the fewest violations win. Ties
    on cut go to the lower density-uniformity sum, then to the
    lexicographically smaller assignment.
    """
    m = len(gm)
    if m == 0:
        return []
    adj = gm.adjacency()
    inc = [set() for _ in range(m)]
    for a, b in gm.incompatible:
        inc[a].add(b)
        inc[b].add(a)
    parts = [0] * m
    candidates = []

    def rec(v, used, cut, viol):
        if v == m:
            candidates.append((viol, -cut, tuple(parts)))
            return
        for p in range(min(used + 1, 3)):
            gain = sum(w for u, w in adj[v].items() if u < v and parts[u] != p)
            bad = sum(1 for u in inc[v] if u < v and parts[u] == p)
            parts[v] = p
            rec(v + 1, max(used, p + 1), cut + gain, viol + bad)
        parts[v] = 0

    parts[0] = 0
    rec(1, 1, 0.0, 0)
    candidates.sort()
    viol0, negcut0 = candidates[0][0], candidates[0][1]
    tied = [c for c in candidates if c[0] == viol0 and c[1] <= negcut0 + tol]
    if use_balance and len(tied) > 1:
        tied.sort(key=lambda c: (round(gm.balance(c[2]), 9), c[2]))
    else:
        tied.sort(key=lambda c: c[2])
    return list(tied[0][2])


def _balance_delta(state, den, src, dst):
    """Change of the DU sum over the node's bins when it moves from src to dst."""
    if not den:
        return 0.0
    ks = list(den)
    xs = np.array([den[k] for k in ks])
    before = state[ks]
    after = before.copy()
    after[:, src] -= xs
    after[:, dst] += xs
    np.maximum(after, 0.0, out=after)
    return du_sum(after) - du_sum(before)


def _density_state(gm, parts):
    bins = sorted({k for d in gm.density for k in d})
    pos = {k: i for i, k in enumerate(bins)}
    state = np.zeros((len(bins), 3))
    dens = []
    for den, p in zip(gm.density, parts):
        local = {pos[k]: x for k, x in den.items()}
        dens.append(local)
        for k, x in local.items():
            state[k, p] += x
    return state, dens


def _initial_partition(gm, adj, inc, beta_m, order):
    m = len(gm)
    parts = [-1] * m
    bins = sorted({k for d in gm.density for k in d})
    pos = {k: i for i, k in enumerate(bins)}
    state = np.zeros((len(bins), 3))
    for v in order:
        local = {pos[k]: x for k, x in gm.density[v].items()}
        best = None
        for p in range(3):
            illegal = any(parts[u] == p for u in inc[v])
            same = sum(w for u, w in adj[v].items() if parts[u] == p)
            bal = 0.0
            if beta_m and local:
                ks = list(local)
                before = state[ks]
                after = before.copy()
                after[:, p] += [local[k] for k in ks]
                bal = du_sum(after) - du_sum(before)
            key = (illegal, same + beta_m * bal, p)
            if best is None or key < best:
                best = key
        parts[v] = best[2]
        for k, x in local.items():
            state[k, parts[v]] += x
    return parts


def fm_threeway(gm: MappingGraph, passes: int = 10, seed: int = 0, beta_m: float = 0.0,
                restarts: int = 4):
    """Move-based three-way max-cut refinement.

    Each pass tentatively moves every node once (best legal gain first, gain =
    cut increase + beta_m * DU decrease), then keeps the best prefix of those
    moves. Several starts are tried: a greedy placement by descending density
    weight, then seeded shuffles of that order; the best result is returned.
    """
    m = len(gm)
    if m == 0:
        return []
    adj = gm.adjacency()
    inc = [set() for _ in range(m)]
    for a, b in gm.incompatible:
        inc[a].add(b)
        inc[b].add(a)
    rng = random.Random(seed)
    base = sorted(range(m), key=lambda v: (-gm.weight[v], v))
    best_key, best_parts = None, None
    for r in range(max(1, restarts)):
        order = list(base)
        if r:
            rng.shuffle(order)
        parts = _initial_partition(gm, adj, inc, beta_m, order)
        parts = _fm_passes(gm, adj, inc, parts, passes, beta_m, order)
        score = gm.cut_value(parts)
        if beta_m:
            score -= beta_m * gm.balance(parts)
        key = (gm.violations(parts), -round(score, 9), tuple(parts))
        if best_key is None or key < best_key:
            best_key, best_parts = key, parts
    return _canonical(best_parts)


def _fm_passes(gm, adj, inc, parts, passes, beta_m, order):
    m = len(gm)
    rank = {v: i for i, v in enumerate(order)}
    use_bal = bool(beta_m) and any(gm.density)
    for _ in range(passes):
        state, dens = _density_state(gm, parts) if use_bal else (None, None)
        locked = [False] * m
        moves = []
        total = 0.0
        for _step in range(m):
            best = None
            for v in range(m):
                if locked[v]:
                    continue
                src = parts[v]
                here = sum(w for u, w in adj[v].items() if parts[u] == src)
                for dst in range(3):
                    if dst == src or any(parts[u] == dst for u in inc[v]):
                        continue
                    there = sum(w for u, w in adj[v].items() if parts[u] == dst)
                    gain = here - there
                    if use_bal:
                        gain -= beta_m * _balance_delta(state, dens[v], src, dst)
                    key = (-round(gain, 12), rank[v], dst)
                    if best is None or key < best[0]:
                        best = (key, v, src, dst, gain)
            if best is None:
                break
            _, v, src, dst, gain = best
            parts[v] = dst
            locked[v] = True
            if use_bal:
                for k, x in dens[v].items():
                    state[k, src] -= x
                    state[k, dst] += x
            total += gain
            moves.append((v, src, total))
        if not moves:
            break
        best_i, best_total = -1, 0.0
        for i, (_, _, t) in enumerate(moves):
            if t > best_total + 1e-12:
                best_i, best_total = i, t
        for v, src, _ in reversed(moves[best_i + 1:]):
            parts[v] = src
        if best_i < 0:
            break
    return parts


def _canonical(parts):
    """Relabel parts in order of first appearance."""
    remap = {}
    out = []
    for p in parts:
        if p not in remap:
            remap[p] = len(remap)
        out.append(remap[p])
    return out


def brute_force_cut(gm: MappingGraph):
    """Maximum cut over all 3^m assignments (incompatibility-respecting first)."""
    best = None
    for parts in itertools.product(range(3), repeat=len(gm)):
        key = (gm.violations(parts), -gm.cut_value(parts))
        if best is None or key < best:
            best = key
    if best is None:
        return 0.0
    return -best[1]


@dataclass
class MappingResult:
    coloring: dict
    merge: MergeState
    graph: MappingGraph
    method: str


def map_coloring(g: DecompositionGraph, X, alpha: float = 0.1, beta: float = 0.04,
                 th_unn: float = 0.9, th_sp: float = -0.4, kappa: float = 1.0,
                 backtrack_limit: int = 7, seed: int = 0, fm_passes: int = 10) -> MappingResult:
    """Turn a relaxed solution ``X`` over ``g.vertices`` into a 3-coloring."""
    ms = threshold_merge(X, g, th_unn, th_sp)
    gm = build_mapping_graph(ms, g, X, alpha, kappa)
    if len(gm) <= backtrack_limit:
        parts = backtrack_threeway(gm, use_balance=beta > 0)
        method = "backtrack"
    else:
        parts = fm_threeway(gm, passes=fm_passes, seed=seed, beta_m=beta)
        method = "fm"
    coloring = {}
    for node, mem in enumerate(gm.members):
        for i in mem:
            coloring[g.vertices[i]] = parts[node]
    return MappingResult(coloring, ms, gm, method)
