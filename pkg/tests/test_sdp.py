import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph, walkthrough_graph
from tpldecomp.metrics import brute_force_vector_program, mask_gram
from tpldecomp.sdp import (MASK_VECTORS, assemble_cost_matrix, balance_from_vectors, balance_surrogate,
                           check_sdp_feasibility, dump_sparse, parse_sparse, solve_sdp, vector_gram)

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def random_graph(rng, n, p_conf=0.5, p_stitch=0.2, dens=True):
    pairs = list(itertools.combinations(range(n), 2))
    conf = [p for p in pairs if rng.random() < p_conf]
    stit = [p for p in pairs if p not in conf and rng.random() < p_stitch]
    den = rng.random((n, 3)) * (rng.random((n, 3)) < 0.5) if dens else None
    return graph(n, conf, stit, den)


def test_cost_triangle():
    c = assemble_cost_matrix(graph(3, TRIANGLE), alpha=0.1, beta=0.0)
    assert np.array_equal(c.A, np.ones((3, 3)) - np.eye(3))
    assert c.conflict_pairs == sorted(TRIANGLE)


def test_cost_stitch_entry():
    c = assemble_cost_matrix(graph(2, [], [(0, 1)]), alpha=0.1, beta=0.0)
    assert c.A[0, 1] == pytest.approx(-0.1) and c.A[1, 0] == c.A[0, 1]
    assert c.conflict_pairs == []


def test_cost_density_cross_term():
    c = assemble_cost_matrix(graph(2, densities=[[1, 0], [1, 0]]), alpha=0.1, beta=0.04)
    assert c.A[0, 1] == pytest.approx(0.04)
    assert c.A[0, 0] == pytest.approx(0.04)


def test_cost_symmetric():
    c = assemble_cost_matrix(random_graph(np.random.default_rng(3), 9))
    assert np.array_equal(c.A, c.A.T)


def test_single_vertex():
    c = assemble_cost_matrix(graph(1, densities=[[0.5]]), beta=0.04)
    sol = solve_sdp(c)
    assert sol.X.tolist() == [[1.0]]
    assert sol.objective == pytest.approx(c.A[0, 0])


def test_triangle_closed_form():
    sol = solve_sdp(assemble_cost_matrix(graph(3, TRIANGLE), beta=0.0))
    off = sol.X[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off + 0.5) <= 1e-4)
    assert sol.objective == pytest.approx(-3.0, abs=1e-5)


def test_two_nodes():
    sol = solve_sdp(assemble_cost_matrix(graph(2, [(0, 1)]), beta=0.0))
    assert sol.X[0, 1] == pytest.approx(-0.5, abs=1e-4)
    assert sol.objective == pytest.approx(-1.0, abs=1e-5)


def test_feasibility_reports():
    c = assemble_cost_matrix(graph(3, TRIANGLE))
    assert check_sdp_feasibility(np.eye(3), c).ok
    X = np.eye(3)
    X[0, 0] = 0.9
    rep = check_sdp_feasibility(X, c)
    assert rep.equality == pytest.approx(0.1) and not rep.ok
    v = np.ones(3) / 1.0
    rep = check_sdp_feasibility(np.outer(v, v), assemble_cost_matrix(graph(3)))
    assert rep.ok and rep.min_eigenvalue == pytest.approx(0.0, abs=1e-12)


def test_walkthrough_relaxation_bound():
    c = assemble_cost_matrix(walkthrough_graph(), beta=0.0)
    sol = solve_sdp(c)
    best, _ = brute_force_vector_program(c.A)
    assert check_sdp_feasibility(sol, c).ok
    assert sol.lower_bound <= best + 1e-9
    assert sol.objective <= best + 1e-5


def test_validity_and_lower_bound_on_fixtures():
    rng = np.random.default_rng(11)
    for _ in range(60):
        g = random_graph(rng, int(rng.integers(2, 11)))
        c = assemble_cost_matrix(g, alpha=0.1, beta=0.04)
        sol = solve_sdp(c)
        rep = check_sdp_feasibility(sol, c)
        assert rep.ok, rep
        best, _ = brute_force_vector_program(c.A)
        assert sol.objective <= best + 1e-5


def test_matches_cvxpy():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(5)
    for _ in range(8):
        c = assemble_cost_matrix(random_graph(rng, 12), beta=0.04)
        X = cp.Variable(c.A.shape, symmetric=True)
        cons = [X >> 0, cp.diag(X) == 1] + [X[i, j] >= -0.5 for i, j in c.conflict_pairs]
        ref = cp.Problem(cp.Minimize(cp.trace(c.A @ X)), cons).solve(solver="CLARABEL")
        sol = solve_sdp(c)
        assert sol.objective == pytest.approx(ref, abs=12 * 1e-6 + 1e-7)


def test_scaling_invariance():
    c = assemble_cost_matrix(random_graph(np.random.default_rng(2), 8), beta=0.04)
    base = solve_sdp(c)
    c.A = 3.0 * c.A
    scaled = solve_sdp(c)
    assert scaled.objective == pytest.approx(3.0 * base.objective, abs=1e-4)


def test_deterministic():
    c = assemble_cost_matrix(random_graph(np.random.default_rng(4), 10), beta=0.04)
    a, b = solve_sdp(c), solve_sdp(c)
    assert np.array_equal(a.X, b.X) and a.iterations == b.iterations


def test_iteration_cap_returns_feasible_point():
    c = assemble_cost_matrix(random_graph(np.random.default_rng(6), 10), beta=0.04)
    sol = solve_sdp(c, max_iter=20)
    assert not sol.converged
    assert check_sdp_feasibility(sol, c).ok


def test_mask_vectors():
    G = vector_gram([0, 1, 2, 0])
    assert np.allclose(G, mask_gram([0, 1, 2, 0]))
    assert np.allclose(np.linalg.norm(MASK_VECTORS, axis=1), 1.0)


def test_lemma_identity():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        den = rng.random(n) * rng.integers(0, 2, n)
        colors = rng.integers(0, 3, n)
        d = [den[colors == c].sum() for c in range(3)]
        assert abs(balance_surrogate(d) - balance_from_vectors(den, colors)) <= 1e-9


def test_equal_split_maximizes_pairwise_products():
    s = 1.0
    steps = 300
    h = s / steps
    best, arg = -1.0, None
    for i in range(steps + 1):
        for j in range(steps + 1 - i):
            d = (i * h, j * h, s - (i + j) * h)
            v = balance_surrogate(d)
            if v > best + 1e-15:
                best, arg = v, d
    assert all(abs(x - s / 3) <= h for x in arg)
    assert max(arg) / min(arg) == pytest.approx(1.0, abs=3 * h / min(arg))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.randoms(use_true_random=False))
def test_sparse_roundtrip(n, r):
    M = np.array([[r.uniform(-1, 1) if r.random() < 0.4 else 0.0 for _ in range(n)] for _ in range(n)])
    M = M + M.T
    assert np.array_equal(parse_sparse(dump_sparse(M)), M)
    assert dump_sparse(M).splitlines()[0] == f"{n} {np.count_nonzero(np.triu(M))}"
