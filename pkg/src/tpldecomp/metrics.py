"""Coloring evaluation (conflicts, stitches, density uniformity) and exhaustive oracles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .decomp_graph import DecompositionGraph

EPS = 1e-6
FORMAT_VERSION = 1


def density_uniformity(d, eps: float = EPS) -> float:
    """max/min of the three per-mask densities of a bin, guarded by ``eps``."""
    return (max(d) + eps) / (min(d) + eps)


def du_sum(per_bin: np.ndarray, eps: float = EPS) -> float:
    """Sum of DU over bins with non-zero total density; ``per_bin`` is (bins, 3)."""
    per_bin = np.asarray(per_bin, dtype=float)
    if per_bin.size == 0:
        return 0.0
    live = per_bin.sum(axis=1) > 0
    p = per_bin[live]
    return float(np.sum((p.max(axis=1) + eps) / (p.min(axis=1) + eps)))


class DensityState:
    """Running per-bin, per-mask density totals for incremental balance decisions."""

    def __init__(self, n_bins: int, eps: float = EPS):
        self.d = np.zeros((n_bins, 3))
        self.eps = eps

    def add(self, density: dict, color: int, sign: float = 1.0):
        for k, x in density.items():
            self.d[k, color] += sign * x

    def delta_du(self, density: dict, color: int) -> float:
        """Change of the DU sum over touched bins if ``density`` joins mask ``color``."""
        if not density:
            return 0.0
        ks = np.fromiter(density.keys(), dtype=int)
        xs = np.fromiter(density.values(), dtype=float)
        before = self.d[ks]
        after = before.copy()
        after[:, color] += xs
        return du_sum(after, self.eps) - du_sum(before, self.eps)

    def cost_of(self, assignments) -> float:
        """DU sum over touched bins after a batch of (density, color) additions."""
        touched = sorted({k for den, _ in assignments for k in den})
        if not touched:
            return 0.0
        pos = {k: i for i, k in enumerate(touched)}
        block = self.d[touched].copy()
        for den, c in assignments:
            for k, x in den.items():
                block[pos[k], c] += x
        return du_sum(block, self.eps)


@dataclass
class DecompositionReport:
    conflicts: int = 0
    stitches: int = 0
    cost: float = 0.0
    du_per_bin: list = field(default_factory=list)
    du_sum: float = 0.0
    runtime_ms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def objective(self, alpha=0.1, beta=0.0):
        return self.conflicts + alpha * self.stitches + beta * self.du_sum

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "format_version": FORMAT_VERSION,
            "conflicts": self.conflicts,
            "stitches": self.stitches,
            "cost": round(self.cost, 12),
            "du_sum": float(self.du_sum),
            "du_per_bin": [[int(k), float(v)] for k, v in self.du_per_bin],
        }
        out.update(self.extra)
        if timings:
            out["runtime_ms"] = {k: round(v, 3) for k, v in self.runtime_ms.items()}
        return out

    def to_text(self, timings: bool = False) -> str:
        """Stable JSON text: one field per line, one bin per line."""
        d = self.to_dict(timings)
        lines = []
        for key, val in d.items():
            if key == "du_per_bin":
                rows = [f"    {json.dumps(r)}" for r in val]
                body = "[\n" + ",\n".join(rows) + "\n  ]" if rows else "[]"
                lines.append(f'  "{key}": {body}')
            else:
                lines.append(f"  {json.dumps(key)}: {json.dumps(val)}")
        return "{\n" + ",\n".join(lines) + "\n}\n"


def per_bin_densities(g: DecompositionGraph, coloring: dict, n_bins: int | None = None):
    """(bins, 3) array of per-mask densities, plus the sorted bin ids it covers."""
    bins = sorted({k for v in g.vertices for k in g.density.get(v, {})})
    pos = {k: i for i, k in enumerate(bins)}
    d = np.zeros((len(bins), 3))
    for v in g.vertices:
        c = coloring[v]
        for k, x in g.density.get(v, {}).items():
            d[pos[k], c] += x
    return d, bins


def evaluate_coloring(g: DecompositionGraph, coloring: dict, grid=None, alpha: float = 0.1,
                      eps: float = EPS) -> DecompositionReport:
    missing = [v for v in g.vertices if v not in coloring]
    if missing:
        raise ValueError(f"coloring is partial: {len(missing)} vertices uncolored, e.g. {missing[0]!r}")
    conflicts = sum(w for (u, v), w in g.conflict.items() if coloring[u] == coloring[v])
    stitches = sum(w for (u, v), w in g.stitch.items() if coloring[u] != coloring[v])
    d, bins = per_bin_densities(g, coloring)
    per_bin = []
    for k, row in zip(bins, d):
        if row.sum() > 0:
            per_bin.append((int(k), float(density_uniformity(row, eps))))
    return DecompositionReport(
        conflicts=int(conflicts),
        stitches=int(stitches),
        cost=conflicts + alpha * stitches,
        du_per_bin=per_bin,
        du_sum=float(sum(v for _, v in per_bin)),
    )


def _enumerate(n, chunk=3 ** 10):
    """Yield blocks of colorings of n vertices with vertex 0 fixed to color 0, in lexicographic order."""
    free = n - 1
    total = 3 ** free
    powers = 3 ** np.arange(free - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        C = np.zeros((len(idx), n), dtype=np.int8)
        if free:
            C[:, 1:] = (idx[:, None] // powers[None, :]) % 3
        yield C


MAX_ORACLE = 15


def brute_force_optimal(g: DecompositionGraph, alpha: float = 0.1, beta: float = 0.0, grid=None,
                        eps: float = EPS):
    """Exact minimizer of conflicts + alpha*stitches + beta*sum(DU) by enumeration.

    Vertex 0 is pinned to color 0 (the objective is invariant under mask
    permutation). Ties go to the lexicographically smallest coloring.
    """
    n = len(g.vertices)
    if n > MAX_ORACLE:
        raise ValueError(f"oracle limited to {MAX_ORACLE} vertices, got {n}")
    if n == 0:
        return {}, 0.0
    idx = {v: i for i, v in enumerate(g.vertices)}
    ce = np.array([(idx[u], idx[v], w) for (u, v), w in g.conflict.items()], dtype=float).reshape(-1, 3)
    se = np.array([(idx[u], idx[v], w) for (u, v), w in g.stitch.items()], dtype=float).reshape(-1, 3)
    from .sdp import density_matrix

    D, _ = density_matrix(g)
    chunk = 3 ** 10
    if beta and D.size:
        chunk = max(243, min(chunk, 2_000_000 // (3 * D.shape[1])))
    best_val, best_row = np.inf, None
    for C in _enumerate(n, chunk):
        val = np.zeros(len(C))
        for u, v, w in ce:
            val += w * (C[:, int(u)] == C[:, int(v)])
        for u, v, w in se:
            val += alpha * w * (C[:, int(u)] != C[:, int(v)])
        if beta and D.size:
            onehot = (C[:, :, None] == np.arange(3)[None, None, :]).astype(float)
            per = np.einsum("nvc,vk->nkc", onehot, D)
            live = per.sum(axis=2) > 0
            du = (per.max(axis=2) + eps) / (per.min(axis=2) + eps)
            val += beta * np.where(live, du, 0.0).sum(axis=1)
        i = int(np.argmin(val))
        if val[i] < best_val:
            best_val, best_row = float(val[i]), C[i].copy()
    coloring = {v: int(best_row[idx[v]]) for v in g.vertices}
    return coloring, best_val


def brute_force_vector_program(A: np.ndarray):
    """Minimum of <A, V> over mask assignments, V_ij = 1 if equal masks else -1/2."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return 0.0, []
    best, arg = np.inf, None
    total = A.sum()
    iu = np.triu_indices(n, 1)
    Au = (A + A.T)[iu]
    diag = np.trace(A)
    off = total - diag
    for C in _enumerate(n):
        same = (C[:, iu[0]] == C[:, iu[1]]).astype(float)
        # <A,V> = diag + sum_{i<j} (A_ij + A_ji) * (1.5*same - 0.5)
        val = diag + 1.5 * same @ Au - 0.5 * off
        i = int(np.argmin(val))
        if val[i] < best:
            best, arg = float(val[i]), C[i].tolist()
    return best, arg


def mask_gram(colors) -> np.ndarray:
    c = np.asarray(colors)
    same = c[:, None] == c[None, :]
    return np.where(same, 1.0, -0.5)
