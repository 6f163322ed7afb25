"""End-to-end decomposition: graphs, stitch candidates, per-block coloring, recovery, merge."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .decomp_graph import DecompositionGraph, build_decomposition_graph, cluster_vertices, fast_color_trial
from .geometry import DensityGrid, LayoutSpec, build_density_grid, min_coloring_distance
from .layout_graph import (LayoutGraph, build_layout_graph, find_cut_vertices, simplify_low_degree,
                           split_biconnected, split_independent_components)
from .mapping import map_coloring
from .metrics import MAX_ORACLE, DecompositionReport, DensityState, brute_force_optimal, evaluate_coloring
from .recovery import merge_component_colorings, recover_removed_vertices
from .sdp import assemble_cost_matrix, solve_sdp
from .stitch import feature_candidates, forbid_cut_vertex_stitches


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass
class DecomposerOptions:
    alpha: float = 0.1
    beta: float = 0.04
    bin_factor: float = 10.0
    overlap: float = 0.5
    th_union: float = 0.9
    th_separate: float = -0.4
    kappa: float = 1.0
    backtrack_limit: int = 7
    max_stitch: int = 4
    sdp_tol: float = 1e-6
    sdp_max_iter: int = 5000
    sdp_gap: float = 1e-3
    seed: int = 0
    simplify: bool = True
    jobs: int = 1
    fm_passes: int = 10
    oracle: bool = False


@dataclass
class DecompositionResult:
    spec: LayoutSpec
    dis_m: int
    grid: DensityGrid
    layout_graph: LayoutGraph
    core: LayoutGraph
    stack: list
    sequences: list
    candidates: dict
    graph: DecompositionGraph
    coloring: dict
    report: DecompositionReport
    block_info: list = field(default_factory=list)
    sdp_matrices: list = field(default_factory=list)


def color_block(g: DecompositionGraph, opts: DecomposerOptions, simplify: bool = True):
    """Color one biconnected piece.

    Returns the coloring over fragment keys, a small info dict and, when the
    relaxation ran, the (cost matrix, solution matrix) pair.
    """
    if not g.vertices:
        return {}, {"method": "empty", "vertices": 0}, None
    work = g
    if simplify:
        work = cluster_vertices(g, opts.alpha)
        trial = fast_color_trial(work)
        if trial is not None:
            return work.expand(trial), {"method": "fast", "vertices": len(g), "clustered": len(work)}, None
    cost = assemble_cost_matrix(work, opts.alpha, opts.beta)
    sol = solve_sdp(cost, tol=opts.sdp_tol, max_iter=opts.sdp_max_iter, seed=opts.seed,
                    gap_rel=opts.sdp_gap)
    mapped = map_coloring(work, sol.X, alpha=opts.alpha, beta=opts.beta, th_unn=opts.th_union,
                          th_sp=opts.th_separate, kappa=opts.kappa,
                          backtrack_limit=opts.backtrack_limit, seed=opts.seed,
                          fm_passes=opts.fm_passes)
    info = {"method": "sdp+" + mapped.method, "vertices": len(g), "clustered": len(work),
            "sdp_iterations": sol.iterations, "sdp_converged": sol.converged,
            "sdp_objective": sol.objective, "mapping_nodes": len(mapped.graph)}
    return work.expand(mapped.coloring), info, (cost.A, sol.X)


def _color_block_job(args):
    g, opts, simplify = args
    return color_block(g, opts, simplify)


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - rewrapped with the stage name
        raise StageError(name, str(exc)) from exc


def generate_candidates(spec: LayoutSpec, core: LayoutGraph, dis_m: int, max_stitch: int):
    """Projection sequences and stitch candidates for the core features.

    Projections only look at core neighbors, and cut vertices get no stitches.
    """
    cuts = find_cut_vertices(core)
    order = {v: i for i, v in enumerate(core.vertices)}
    sequences, cands = [], {}
    for fid in core.vertices:
        nbrs = [spec.feature(u).pieces for u in sorted(core.adj[fid], key=order.__getitem__)]
        seqs, cs = feature_candidates(spec.feature(fid), nbrs, dis_m, max_stitch)
        sequences.extend(seqs)
        cs = forbid_cut_vertex_stitches(cs, cuts)
        if cs:
            cands[fid] = cs
    return sequences, cands, cuts


def decompose(spec: LayoutSpec, options: DecomposerOptions | None = None) -> DecompositionResult:
    opts = options or DecomposerOptions()
    timings = {}
    t0 = time.perf_counter()

    def lap(name):
        nonlocal t0
        t = time.perf_counter()
        timings[name] = timings.get(name, 0.0) + 1000 * (t - t0)
        t0 = t

    dis_m = min_coloring_distance(spec)
    grid = _stage("density", build_density_grid, spec, opts.bin_factor, opts.overlap)
    lap("density")
    lg = _stage("layout-graph", build_layout_graph, spec, dis_m)
    core, stack = _stage("layout-graph", simplify_low_degree, lg)
    lap("layout_graph")
    sequences, cands, _cuts = _stage("stitch", generate_candidates, spec, core, dis_m, opts.max_stitch)
    lap("stitch")
    features = {f.id: f for f in spec.features}
    dg = _stage("decomposition-graph", build_decomposition_graph, lg, features, cands, grid, dis_m)
    lap("decomposition_graph")

    use_balance = opts.beta > 0
    state = DensityState(grid.n_bins)
    block_info, matrices = [], []

    if opts.simplify:
        by_feature = {}
        for k in dg.vertices:
            by_feature.setdefault(k[0], []).append(k)
        jobs, joins = [], []
        for comp in split_independent_components(core):
            tree = split_biconnected(comp)
            base = len(jobs)
            for b in tree.blocks:
                keys = [k for fid in b.vertices for k in by_feature[fid]]
                jobs.append(dg.subgraph(keys))
            joins.extend((base + i, base + j, (v, 0)) for i, j, v in tree.joins)
        results = _run_blocks([(g, opts, True) for g in jobs], opts.jobs)
        lap("coloring")
        parts = []
        for col, info, mats in results:
            parts.append(col)
            block_info.append(info)
            if mats is not None:
                matrices.append(mats)
        coloring = _stage("merge", merge_component_colorings, parts, joins, state, dg.density, use_balance)
        lap("merge")
        conf, _ = dg.neighbors()
        nbrs = {(v, 0): sorted(conf[(v, 0)]) for v, _ in stack}
        coloring = _stage("recovery", recover_removed_vertices, [((v, 0), s) for v, s in stack], coloring,
                          state, dg.density, nbrs, use_balance)
        lap("recovery")
    else:
        col, info, mats = _stage("coloring", color_block, dg, opts, False)
        coloring = {k: col[k] for k in dg.vertices}
        block_info.append(info)
        if mats is not None:
            matrices.append(mats)
        lap("coloring")

    coloring = {k: coloring[k] for k in dg.vertices}
    report = _stage("evaluate", evaluate_coloring, dg, coloring, grid, opts.alpha)
    report.extra = {
        "features": len(spec.features),
        "fragments": len(dg.vertices),
        "conflict_edges": len(dg.conflict),
        "stitch_edges": len(dg.stitch),
        "core_features": len(core.vertices),
        "removed_features": len(stack),
        "blocks": len(block_info),
        "objective": report.cost + opts.beta * report.du_sum,
        "fast_trial_blocks": sum(1 for b in block_info if b["method"] == "fast"),
        "sdp_blocks": sum(1 for b in block_info if b["method"].startswith("sdp")),
    }
    if opts.oracle and len(dg.vertices) <= MAX_ORACLE:
        _, ov = brute_force_optimal(dg, opts.alpha, 0.0)
        report.extra["oracle_cost"] = round(ov, 12)
    lap("evaluate")
    report.runtime_ms = timings
    return DecompositionResult(spec, dis_m, grid, lg, core, stack, sequences, cands, dg, coloring,
                               report, block_info, matrices)


def _run_blocks(jobs, n_jobs):
    if n_jobs <= 1 or len(jobs) < 2:
        return [_stage("coloring", _color_block_job, j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_color_block_job, jobs))
