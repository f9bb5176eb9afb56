import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_triangles
from tuzalab.graph import (Graph, GnpParams, TriangleSystem, canonical_json, count_isolated_triangles,
                           disjoint_union, enumerate_triangles, expected_isolated_triangles,
                           pair_rank, sample_gnp)
from tuzalab.rng import derive_seed, edge_uniform, make_generator


@st.composite
def small_graphs(draw, max_n=12):
    n = draw(st.integers(0, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, k in zip(pairs, keep) if k])


def test_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 3)])
    with pytest.raises(ValueError):
        Graph(3, np.array([[1, 0]]))


def test_graph_is_read_only():
    g = Graph.complete(4)
    with pytest.raises(ValueError):
        g.edges[0, 0] = 3


def test_edge_lookup():
    g = Graph.from_edges(5, [(3, 1), (0, 4), (1, 2)])
    assert g.edges.tolist() == [[0, 4], [1, 2], [1, 3]]
    assert g.edge_id(3, 1) == 2 and g.edge_id(0, 1) == -1
    assert g.edge_ids(np.array([1, 0]), np.array([2, 2])).tolist() == [1, -1]
    assert Graph(3, np.zeros((0, 2))).edge_ids(np.array([0]), np.array([1])).tolist() == [-1]


def test_gnp_extremes():
    assert sample_gnp(GnpParams(5, 0.0, 9)).m == 0
    assert sample_gnp(GnpParams(5, 1.0, 9)) == Graph.complete(5)
    with pytest.raises(ValueError):
        sample_gnp(GnpParams(1, 0.5))
    with pytest.raises(ValueError):
        GnpParams(5, 1.5)


def test_gnp_edge_count():
    g = sample_gnp(GnpParams(2000, 0.01, 7))
    mean = math.comb(2000, 2) * 0.01
    sd = math.sqrt(mean * 0.99)
    assert abs(g.m - mean) < 4 * sd


def test_gnp_derived_quantities():
    gp = GnpParams.from_d(3000, 2.0)
    assert gp.d == pytest.approx(2.0)
    assert gp.m == pytest.approx(math.comb(3000, 2) * gp.p)


def test_gnp_reads_one_uniform_per_pair():
    gp = GnpParams(40, 0.3, 123)
    g = sample_gnp(gp)
    u = make_generator(123).random(math.comb(40, 2))
    for a in range(40):
        for b in range(a + 1, 40):
            k = pair_rank(40, a, b)
            assert g.has_edge(a, b) == (u[k] < 0.3)
    for k in (0, 5, 77, 779):
        assert edge_uniform(123, k) == u[k]


def test_gnp_chunking_does_not_change_the_graph():
    gp = GnpParams(300, 0.05, 4)
    assert sample_gnp(gp) == sample_gnp(gp, chunk=1000)


def test_gnp_determinism_bytes():
    gp = GnpParams(500, 0.02, 99)
    assert canonical_json(sample_gnp(gp).to_dict()) == canonical_json(sample_gnp(gp).to_dict())
    assert sample_gnp(gp) != sample_gnp(GnpParams(500, 0.02, 100))


def test_derive_seed_is_stable():
    assert derive_seed(1, 0, 0) == derive_seed(1, 0, 0)
    assert len({derive_seed(1, c, t) for c in range(5) for t in range(5)}) == 25


@pytest.mark.parametrize("n,count", [(4, 4), (5, 10)])
def test_complete_graph_triangles(n, count):
    assert len(enumerate_triangles(Graph.complete(n))) == count


def test_bipartite_has_no_triangles():
    g = Graph.from_edges(8, [(u, v) for u in range(4) for v in range(4, 8)])
    for method in ("dense", "sparse"):
        assert len(enumerate_triangles(g, method)) == 0


@settings(max_examples=150, deadline=None)
@given(small_graphs())
def test_enumeration_matches_brute_force(g):
    want = brute_triangles(g)
    for method in ("dense", "sparse"):
        ts = enumerate_triangles(g, method)
        assert [tuple(t) for t in ts.triangles.tolist()] == want


@settings(max_examples=100, deadline=None)
@given(small_graphs())
def test_incidence_is_consistent(g):
    ts = enumerate_triangles(g)
    assert ts.load.sum() == 3 * len(ts)
    for i, (a, b, c) in enumerate(ts.triangles.tolist()):
        for u, v in ((a, b), (a, c), (b, c)):
            e = g.edge_id(u, v)
            assert e >= 0
            assert i in ts.triangles_on(e).tolist()
    for e in range(g.m):
        on = ts.triangles_on(e).tolist()
        assert on == sorted(on)
        for i in on:
            assert e in ts.tri_edges[i].tolist()


def test_dense_and_sparse_agree_on_random_graph():
    g = sample_gnp(GnpParams.from_d(600, 3.0, 5))
    a = enumerate_triangles(g, "dense")
    b = enumerate_triangles(g, "sparse")
    assert np.array_equal(a.triangles, b.triangles)


def test_isolated_triangles():
    tri = Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    g = disjoint_union(tri, tri, tri)
    assert count_isolated_triangles(enumerate_triangles(g)) == 3
    assert count_isolated_triangles(enumerate_triangles(Graph.complete(4))) == 0


def test_isolated_triangle_mean():
    n = 200
    gp = GnpParams.from_d(n, 0.3)
    counts = np.array([count_isolated_triangles(enumerate_triangles(sample_gnp(GnpParams(n, gp.p, s))))
                       for s in range(400)])
    want = expected_isolated_triangles(n, gp.p)
    assert want == pytest.approx(math.comb(n, 3) * gp.p**3 * (1 - 3 * gp.p**2 + 2 * gp.p**3) ** (n - 3))
    assert abs(counts.mean() - want) < 4 * counts.std(ddof=1) / math.sqrt(len(counts))


def test_serialisation_round_trips(tmp_path):
    g = sample_gnp(GnpParams(30, 0.2, 1))
    assert Graph.from_dict(g.to_dict()) == g
    assert Graph.from_edgelist(g.to_edgelist()) == g
    path = tmp_path / "g.txt"
    g.write_edgelist(path)
    lines = path.read_text().splitlines()
    assert lines[0] == f"{g.n} {g.m}"
    assert Graph.read_edgelist(path) == g
    ts = enumerate_triangles(g)
    back = TriangleSystem.from_dict(ts.to_dict())
    assert np.array_equal(back.triangles, ts.triangles)
