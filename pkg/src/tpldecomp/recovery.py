"""Putting peeled vertices back and stitching per-block colorings into one."""

from __future__ import annotations

import itertools
from collections import deque

from .metrics import DensityState

PERMUTATIONS = list(itertools.permutations(range(3)))


class RecoveryError(RuntimeError):
    pass


def recover_removed_vertices(stack, coloring: dict, state: DensityState | None = None,
                             density: dict | None = None, neighbors=None,
                             use_balance: bool = True) -> dict:
    """Color peeled vertices in reverse removal order.

    ``stack`` holds ``(vertex, snapshot_neighbors)``. By default a vertex must
    avoid the colors of its snapshot neighbors. ``neighbors`` may map a
    vertex to the keys whose colors it actually has to avoid (for features
    split into fragments); if those already use all three colors, the least
    conflicting color is taken. Among legal colors the one that keeps the
    density-uniformity sum lowest wins, then the lowest index.
    """
    coloring = dict(coloring)
    density = density or {}
    for v, snap in reversed(list(stack)):
        if neighbors is None:
            if len(snap) > 2:
                raise RecoveryError(f"vertex {v!r} was removed with {len(snap)} neighbors")
            near = [coloring[u] for u in sorted(snap, key=repr) if u in coloring]
        else:
            near = [coloring[u] for u in neighbors.get(v, ()) if u in coloring]
        if neighbors is None and len(set(near)) > 2:
            raise RecoveryError(f"vertex {v!r}: neighbors already use all three colors")
        counts = [near.count(c) for c in range(3)]
        fewest = min(counts)
        legal = [c for c in range(3) if counts[c] == fewest]
        den = density.get(v, {})
        if use_balance and state is not None and len(legal) > 1 and den:
            scores = [(round(state.delta_du(den, c), 12), c) for c in legal]
            pick = min(scores)[1]
        else:
            pick = legal[0]
        coloring[v] = pick
        if state is not None:
            state.add(den, pick)
    return coloring


def merge_component_colorings(parts: list[dict], joins, state: DensityState | None = None,
                              density: dict | None = None, use_balance: bool = True) -> dict:
    """Combine per-part colorings that overlap only at shared vertices.

    ``joins`` lists ``(i, j, shared_vertex)`` forming a forest over parts. A
    breadth-first walk starts at the largest part; each part reached through
    a join is relabeled by one of the six color permutations that agrees on
    the shared vertex, choosing the most density-uniform one. Parts not
    reached by any join start their own walk and may take any permutation.
    """
    density = density or {}
    adj = [[] for _ in parts]
    for i, j, v in joins:
        adj[i].append((j, v))
        adj[j].append((i, v))
    merged: dict = {}
    done = [False] * len(parts)
    roots = sorted(range(len(parts)), key=lambda i: (-len(parts[i]), i))
    for root in roots:
        if done[root]:
            continue
        queue = deque([(root, None)])
        done[root] = True
        while queue:
            i, shared = queue.popleft()
            col = parts[i]
            options = PERMUTATIONS
            if shared is not None:
                options = [p for p in PERMUTATIONS if p[col[shared]] == merged[shared]]
            perm = _pick_permutation(col, options, merged, state, density, use_balance)
            for v, c in col.items():
                c2 = perm[c]
                if v in merged and merged[v] != c2:
                    raise RecoveryError(f"shared vertex {v!r} got inconsistent colors")
                if v not in merged:
                    merged[v] = c2
                    if state is not None:
                        state.add(density.get(v, {}), c2)
            for j, v in sorted(adj[i], key=lambda t: t[0]):
                if not done[j]:
                    done[j] = True
                    queue.append((j, v))
    return merged


def _pick_permutation(col, options, merged, state, density, use_balance):
    if not use_balance or state is None or len(options) == 1:
        return options[0]
    fresh = [(density.get(v, {}), c) for v, c in col.items() if v not in merged and density.get(v)]
    if not fresh:
        return options[0]
    best = None
    for p in options:
        score = round(state.cost_of([(d, p[c]) for d, c in fresh]), 12)
        if best is None or score < best[0]:
            best = (score, p)
    return best[1]
