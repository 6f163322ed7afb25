import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import feature, graph, layout, walkthrough_graph
from tpldecomp.decomp_graph import (build_decomposition_graph, cluster_vertices, fast_color_trial,
                                    split_feature)
from tpldecomp.geometry import build_density_grid
from tpldecomp.layout_graph import build_layout_graph, simplify_low_degree
from tpldecomp.metrics import brute_force_optimal, evaluate_coloring
from tpldecomp.pipeline import generate_candidates
from tpldecomp.stitch import StitchCandidate


def test_walkthrough_core_graph(walkthrough_spec):
    lg = build_layout_graph(walkthrough_spec, 96)
    core, _ = simplify_low_degree(lg)
    _, cands, _ = generate_candidates(walkthrough_spec, core, 96, 4)
    assert sorted(cands) == ["a", "d"]
    g = build_decomposition_graph(core, walkthrough_spec.by_id, cands, None, 96)
    assert len(g) == 6
    assert sorted(g.stitch) == [(("a", 0), ("a", 1)), (("d", 0), ("d", 1))]
    assert len(g.conflict) == 9
    # the split lets a's halves see different neighbors
    assert (("a", 0), ("b", 0)) in g.conflict and (("a", 1), ("b", 0)) not in g.conflict
    assert (("a", 1), ("c", 0)) in g.conflict and (("a", 0), ("c", 0)) not in g.conflict


def test_no_candidates_mirrors_layout_graph(walkthrough_spec):
    lg = build_layout_graph(walkthrough_spec, 96)
    g = build_decomposition_graph(lg, walkthrough_spec.by_id, {}, None, 96)
    assert len(g) == len(lg)
    assert g.stitch == {}
    assert {(u[0], v[0]) for u, v in g.conflict} == {tuple(sorted(e)) for e in lg.conflict_edges}


def test_single_stitch_no_neighbors():
    spec = layout({"a": [[0, 0, 1000, 24]]})
    lg = build_layout_graph(spec, 96)
    g = build_decomposition_graph(lg, spec.by_id, {"a": [StitchCandidate("a", 400, "dpl")]}, None, 96)
    assert len(g) == 2 and len(g.stitch) == 1 and g.conflict == {}


def test_fragment_densities_sum_to_feature():
    spec = layout({"a": [[0, 0, 1000, 24]], "b": [[0, 60, 1000, 84]]})
    grid = build_density_grid(spec, 10, 0.5)
    lg = build_layout_graph(spec, 96)
    whole = build_decomposition_graph(lg, spec.by_id, {}, grid, 96)
    cut = build_decomposition_graph(lg, spec.by_id, {"a": [StitchCandidate("a", 333, "dpl")]}, grid, 96)
    total = {}
    for v in cut.vertices:
        if v[0] == "a":
            for k, x in cut.density[v].items():
                total[k] = total.get(k, 0.0) + x
    ref = whole.density[("a", 0)]
    assert total.keys() == ref.keys()
    assert all(total[k] == pytest.approx(ref[k], abs=1e-12) for k in ref)


def test_cluster_shared_neighborhood():
    a, b, c, d1 = range(4)
    g = graph(4, [(a, b), (a, c), (d1, b), (d1, c), (b, c)])
    cg = cluster_vertices(g)
    assert len(cg) == 3
    assert cg.members[a] == (a, d1)
    assert cg.conflict[(a, b)] == 2
    cmap = cg.cluster_map
    assert all(cmap[cmap[v]] == cmap[v] for v in cmap)


def test_cluster_triangle_unchanged():
    g = graph(3, [(0, 1), (1, 2), (0, 2)])
    assert len(cluster_vertices(g)) == 3


def test_cluster_isolated_pair():
    assert len(cluster_vertices(graph(2))) == 1


def test_cluster_drops_internal_stitch():
    g = graph(3, [(0, 2), (1, 2)], [(0, 1)])
    cg = cluster_vertices(g)
    assert len(cg) == 2 and cg.stitch == {}


def test_cluster_walkthrough_graph_keeps_optimum():
    g = walkthrough_graph()
    assert brute_force_optimal(cluster_vertices(g))[1] == pytest.approx(brute_force_optimal(g)[1])


def test_trial_path():
    g = graph(5, [(i, i + 1) for i in range(4)])
    col = fast_color_trial(g)
    rep = evaluate_coloring(g, col)
    assert rep.conflicts == 0 and rep.stitches == 0


def test_trial_k4_fails():
    g = graph(4, list(itertools.combinations(range(4), 2)))
    assert fast_color_trial(g) is None
    assert brute_force_optimal(g)[1] == 1


def test_trial_walkthrough_fails():
    assert fast_color_trial(walkthrough_graph()) is None


def test_trial_lowest_color_first():
    assert fast_color_trial(graph(1)) == {0: 0}
    assert fast_color_trial(graph(2, [(0, 1)])) == {0: 1, 1: 0}


random_graphs = st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=14),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=4),
))


def build(case):
    n, conf, stit = case
    conf = {tuple(sorted(e)) for e in conf if e[0] != e[1]}
    stit = {tuple(sorted(e)) for e in stit if e[0] != e[1]} - conf
    return graph(n, sorted(conf), sorted(stit))


@settings(max_examples=150, deadline=None)
@given(random_graphs)
def test_cluster_preserves_optimum(case):
    g = build(case)
    cg = cluster_vertices(g, alpha=0.1)
    _, best = brute_force_optimal(g, alpha=0.1)
    col, cbest = brute_force_optimal(cg, alpha=0.1)
    assert cbest == pytest.approx(best, abs=1e-9)
    # the expanded coloring scores the same on the original graph
    assert evaluate_coloring(g, cg.expand(col)).cost == pytest.approx(best, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(random_graphs)
def test_trial_success_is_free(case):
    g = build(case)
    col = fast_color_trial(g)
    if col is not None:
        rep = evaluate_coloring(g, col)
        assert rep.conflicts == 0 and rep.stitches == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 999), max_size=5), st.booleans())
def test_split_partitions_feature(cuts, ell):
    rects = [(0, 0, 1000, 24)] + ([(976, 24, 1000, 600)] if ell else [])
    if ell:
        # junction zones never carry candidates
        cuts = [c for c in cuts if c < 976]
    f = feature("a", *rects)
    geoms, edges = split_feature(f, {0: cuts})
    assert sum(r.area for gm in geoms for r in gm) == f.area
    assert len(geoms) == len(set(cuts)) + 1
    assert len(edges) == len(geoms) - 1
    for gm in geoms:
        assert all(r.area > 0 for r in gm)
