"""Density-augmented cost matrix and a first-order solver for its SDP relaxation.

The relaxation is::

    min  <A, X>
    s.t. X_ii = 1,  X_ij >= -1/2 for conflict pairs,  X PSD

solved with an ADMM splitting between the PSD cone and the box-like
constraint set; the PSD projection uses a dense symmetric eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomp_graph import DecompositionGraph

#: The three mask vectors, 120 degrees apart.
MASK_VECTORS = np.array([[1.0, 0.0],
                         [-0.5, math.sqrt(3) / 2],
                         [-0.5, -math.sqrt(3) / 2]])


@dataclass
class CostMatrix:
    A: np.ndarray
    conflict_pairs: list  # (i, j) index pairs, i < j
    vertices: list

    @property
    def n(self):
        return self.A.shape[0]


@dataclass
class SdpSolution:
    X: np.ndarray
    objective: float
    iterations: int
    residuals: tuple  # (equality, inequality, psd)
    converged: bool = True
    lower_bound: float = -math.inf


def density_matrix(g: DecompositionGraph):
    """Dense (n_vertices, n_bins_touched) matrix of normalized densities."""
    bins = sorted({k for v in g.vertices for k in g.density.get(v, {})})
    col = {k: i for i, k in enumerate(bins)}
    D = np.zeros((len(g.vertices), len(bins)))
    for r, v in enumerate(g.vertices):
        for k, x in g.density.get(v, {}).items():
            D[r, col[k]] = x
    return D, bins


def assemble_cost_matrix(g: DecompositionGraph, alpha: float = 0.1, beta: float = 0.04) -> CostMatrix:
    idx = {v: i for i, v in enumerate(g.vertices)}
    n = len(g.vertices)
    D, _ = density_matrix(g)
    A = beta * (D @ D.T) if D.size else np.zeros((n, n))
    A = 0.5 * (A + A.T)
    pairs = []
    for (u, v), w in g.conflict.items():
        i, j = idx[u], idx[v]
        A[i, j] += w
        A[j, i] += w
        pairs.append((min(i, j), max(i, j)))
    for (u, v), w in g.stitch.items():
        i, j = idx[u], idx[v]
        A[i, j] -= alpha * w
        A[j, i] -= alpha * w
    return CostMatrix(A, sorted(pairs), list(g.vertices))


def _project_psd(M):
    w, V = np.linalg.eigh(M)
    pos = w > 0
    # rebuild from whichever side of the spectrum is smaller
    if 2 * pos.sum() <= len(w):
        Vp = V[:, pos]
        P = (Vp * w[pos]) @ Vp.T
    else:
        Vn = V[:, ~pos]
        P = M - (Vn * w[~pos]) @ Vn.T
    return 0.5 * (P + P.T)


def _project_box(M, rows, cols):
    Z = M.copy()
    np.fill_diagonal(Z, 1.0)
    if len(rows):
        vals = np.maximum(Z[rows, cols], -0.5)
        Z[rows, cols] = vals
        Z[cols, rows] = vals
    return Z


def _normalize_diag(X):
    d = np.sqrt(np.clip(np.diag(X), 1e-300, None))
    Y = X / np.outer(d, d)
    Y = 0.5 * (Y + Y.T)
    np.fill_diagonal(Y, 1.0)
    return Y


def solve_sdp(cost: CostMatrix, tol: float = 1e-6, max_iter: int = 5000, seed: int = 0,
              rho: float | None = None, memory: int = 5, gap_rel: float = 0.0) -> SdpSolution:
    """ADMM on ``X in PSD``, ``Z in C``, ``X = Z``, with Anderson acceleration.

    The ADMM step is treated as a fixed-point map on ``(Z, U)``; each step tries
    an extrapolation over the last ``memory`` iterates and keeps it only when
    the fixed-point residual does not grow. Every few iterations the PSD
    iterate is rescaled to unit diagonal and blended with the identity just
    enough to lift any conflict entry back to -1/2, which gives a feasible
    point. The multiplier is likewise pushed to a dual-feasible point, and the
    loop stops once the gap between the two objectives is at most ``n * tol``,
    or at most ``gap_rel * (1 + |objective|)`` when that is looser.
    ``seed`` is accepted for interface stability; the iteration is
    deterministic.
    """
    A = np.asarray(cost.A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return SdpSolution(np.zeros((0, 0)), 0.0, 0, (0.0, 0.0, 0.0))
    if n == 1:
        X = np.ones((1, 1))
        return SdpSolution(X, float(A[0, 0]), 0, (0.0, 0.0, 0.0))
    rows = np.array([i for i, _ in cost.conflict_pairs], dtype=int)
    cols = np.array([j for _, j in cost.conflict_pairs], dtype=int)
    scale = max(1.0, float(np.abs(A).max()))
    A_s = A / scale
    rho = 1.0 if rho is None else rho
    nn = n * n

    def step(w):
        Z, U = w[:nn].reshape(n, n), w[nn:].reshape(n, n)
        X = _project_psd(Z - U - A_s / rho)
        Z_new = _project_box(X + U, rows, cols)
        return np.concatenate([Z_new.ravel(), (U + X - Z_new).ravel()]), X

    w = np.concatenate([np.eye(n).ravel(), np.zeros(nn)])
    Tw, X = step(w)
    res = Tw - w
    # ring buffers of iterate and residual differences
    dW = np.empty((memory, 2 * nn))
    dR = np.empty((memory, 2 * nn))
    k = slot = 0
    best = None
    lower = -np.inf

    def _target(sol):
        return max(n * tol, gap_rel * (1.0 + abs(sol.objective)))

    check = 10
    hold = check
    next_adapt = 0
    it = 0
    for it in range(1, max_iter + 1):
        w_next = None
        if k:
            W, R = dW[:k], dR[:k]
            M = R @ R.T
            M[np.diag_indices_from(M)] += 1e-10 * max(np.trace(M), 1e-300)
            gamma = np.linalg.solve(M, R @ res)
            w_try = w + res - gamma @ W - gamma @ R
            T_try, X_try = step(w_try)
            r_try = T_try - w_try
            if np.linalg.norm(r_try) <= np.linalg.norm(res):
                w_next, T_next, X, r_next = w_try, T_try, X_try, r_try
            else:
                k = slot = 0
        if w_next is None:
            w_next = Tw
            T_next, X = step(w_next)
            r_next = T_next - w_next
        if memory:
            dW[slot] = w_next - w
            dR[slot] = r_next - res
            slot = (slot + 1) % memory
            k = min(k + 1, memory)
        w, Tw, res = w_next, T_next, r_next
        if it % check and it != max_iter:
            continue
        for sol in (_finish(A, X, rows, cols, it), _finish_box(A, w[:nn].reshape(n, n), rows, cols, it)):
            if best is None or sol.objective < best.objective:
                best = sol
        U = w[nn:].reshape(n, n)
        lower = max(lower, scale * _dual_bound(A_s, rho * U, rows, cols))
        if best.objective - lower <= _target(best):
            break
        # keep primal and dual residuals within a factor of each other; each
        # change throws the acceleration history away, so back off in time
        r = np.linalg.norm(res[nn:])
        s_ = rho * np.linalg.norm(res[:nn])
        if it >= next_adapt and (r > 5 * s_ or s_ > 5 * r):
            f = 2.0 if r > 5 * s_ else 0.5
            rho *= f
            hold *= 2
            next_adapt = it + hold
            w[nn:] /= f
            Tw, X = step(w)
            res = Tw - w
            k = slot = 0
    best.iterations = it
    best.lower_bound = lower
    best.converged = best.objective - lower <= _target(best) and max(best.residuals) <= tol
    return best


def _dual_bound(A, Y, rows, cols) -> float:
    """Objective of the nearest dual-feasible point to multiplier ``Y``.

    Dual feasibility asks for Y supported on the diagonal and conflict
    pairs, non-positive on the pairs, and A + Y PSD; the diagonal takes
    up whatever shift the last condition needs.
    """
    n = len(A)
    Y = 0.5 * (Y + Y.T)
    D = np.zeros_like(Y)
    np.fill_diagonal(D, np.diag(Y))
    if len(rows):
        v = np.minimum(Y[rows, cols], 0.0)
        D[rows, cols] = v
        D[cols, rows] = v
    lam = float(np.linalg.eigvalsh(A + D).min())
    if lam < 0:
        D -= lam * np.eye(n)
    return float(-np.trace(D) + (D[rows, cols].sum() if len(rows) else 0.0))


def _finish(A, X, rows, cols, it):
    Xn = _normalize_diag(X)
    if len(rows):
        low = float(Xn[rows, cols].min())
        if low < -0.5:
            # (1-t) X + t I keeps the unit diagonal and PSD-ness
            t = (-0.5 - low) / (-low)
            Xn = (1.0 - t) * Xn + t * np.eye(len(Xn))
    eq = float(np.abs(np.diag(Xn) - 1.0).max())
    ineq = float(max(0.0, (-0.5 - Xn[rows, cols]).max())) if len(rows) else 0.0
    psd = float(max(0.0, -np.linalg.eigvalsh(Xn).min()))
    return SdpSolution(Xn, float(np.sum(A * Xn)), it, (eq, ineq, psd), False)


def _finish_box(A, Z, rows, cols, it):
    """Feasible point from the box iterate: blend with I until PSD."""
    Z = 0.5 * (Z + Z.T)
    lam = float(np.linalg.eigvalsh(Z).min())
    if lam < 0:
        t = -lam / (1.0 - lam)
        Z = (1.0 - t) * Z + t * np.eye(len(Z))
    eq = float(np.abs(np.diag(Z) - 1.0).max())
    ineq = float(max(0.0, (-0.5 - Z[rows, cols]).max())) if len(rows) else 0.0
    psd = float(max(0.0, -np.linalg.eigvalsh(Z).min()))
    return SdpSolution(Z, float(np.sum(A * Z)), it, (eq, ineq, psd), False)


@dataclass
class FeasibilityReport:
    equality: float
    inequality: float
    min_eigenvalue: float
    ok: bool


def check_sdp_feasibility(sol, cost: CostMatrix, tol: float = 1e-6) -> FeasibilityReport:
    X = sol.X if isinstance(sol, SdpSolution) else np.asarray(sol)
    eq = float(np.abs(np.diag(X) - 1.0).max()) if X.size else 0.0
    ineq = 0.0
    for i, j in cost.conflict_pairs:
        ineq = max(ineq, -0.5 - X[i, j])
    lam = float(np.linalg.eigvalsh(0.5 * (X + X.T)).min()) if X.size else 0.0
    ok = eq <= tol and ineq <= tol and lam >= -tol
    return FeasibilityReport(eq, ineq, lam, ok)


def dump_sparse(M: np.ndarray) -> str:
    """Coordinate text form: header ``n nnz``, then ``i j value`` (upper triangle, 1-based)."""
    n = M.shape[0]
    entries = [(i, j, M[i, j]) for i in range(n) for j in range(i, n) if M[i, j] != 0]
    lines = [f"{n} {len(entries)}"]
    lines.extend(f"{i + 1} {j + 1} {v:.17g}" for i, j, v in entries)
    return "\n".join(lines) + "\n"


def parse_sparse(text: str) -> np.ndarray:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    n, nnz = int(lines[0][0]), int(lines[0][1])
    M = np.zeros((n, n))
    for i, j, v in lines[1:1 + nnz]:
        i, j = int(i) - 1, int(j) - 1
        M[i, j] = M[j, i] = float(v)
    return M


def balance_surrogate(d) -> float:
    """Pairwise product sum d1*d2 + d1*d3 + d2*d3; larger means better balanced."""
    d1, d2, d3 = d
    return d1 * d2 + d1 * d3 + d2 * d3


def balance_from_vectors(den, colors) -> float:
    """Same quantity through mask-vector inner products over unordered pairs."""
    den = np.asarray(den, dtype=float)
    V = MASK_VECTORS[np.asarray(colors)]
    G = V @ V.T
    iu = np.triu_indices(len(den), 1)
    return float((2.0 / 3.0) * np.sum(np.outer(den, den)[iu] * (1.0 - G[iu])))


def vector_gram(colors) -> np.ndarray:
    V = MASK_VECTORS[np.asarray(colors)]
    return V @ V.T
