import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tuzalab.graph import Graph, GnpParams, disjoint_union, enumerate_triangles, sample_gnp
from tuzalab.structure import (TreeTriangle, TriangleTree, bfs_triangle_tree, grow_tree, local_ball,
                               random_tree, subsystem, triangle_components, triangle_distance)


def path_of_triangles(k):
    """Triangles (i, i+1, i+2) for i < k: consecutive ones share an edge."""
    edges = {(i, i + 1) for i in range(k + 1)} | {(i, i + 2) for i in range(k)}
    return enumerate_triangles(Graph.from_edges(k + 2, sorted(edges)))


def bowtie():
    return Graph.from_edges(5, [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])


def test_bowtie_has_two_components():
    ts = enumerate_triangles(bowtie())
    comps = triangle_components(ts)
    assert len(comps) == 2
    assert [len(c.triangles) for c in comps] == [1, 1]
    assert sorted(len(c.edge_ids) for c in comps) == [3, 3]


def test_components_partition_edges():
    g = sample_gnp(GnpParams.from_d(300, 1.5, 3))
    ts = enumerate_triangles(g)
    comps = triangle_components(ts)
    assert sorted(np.concatenate([c.edge_ids for c in comps]).tolist()) == list(range(g.m))
    assert sum(len(c.triangles) for c in comps) == len(ts)
    for c in comps:
        es = set(c.edge_ids.tolist())
        for t in c.triangles:
            assert set(ts.tri_edges[t].tolist()) <= es
        if c.trivial:
            assert len(c.edge_ids) == 1


def test_subsystem_keeps_original_labels():
    ts = enumerate_triangles(disjoint_union(Graph.complete(4), Graph.complete(3)))
    sub, idx = subsystem(ts, np.array([4]))
    assert sub.triangles.tolist() == [[4, 5, 6]] and idx.tolist() == [4]


def test_distance_along_a_path():
    ts = path_of_triangles(5)
    assert triangle_distance(ts, (0, 1), (5, 6)) == 5
    assert triangle_distance(ts, (0, 1), (0, 1)) == 0
    assert triangle_distance(ts, (0, 1), (1, 2)) == 1
    assert triangle_distance(ts, (0, 1, 2), (4, 5, 6)) == 5


def test_distance_between_components_is_infinite():
    ts = enumerate_triangles(bowtie())
    assert triangle_distance(ts, (0, 1), (3, 4)) == math.inf


def test_distance_rejects_foreign_elements():
    ts = enumerate_triangles(bowtie())
    with pytest.raises(ValueError):
        triangle_distance(ts, (0, 1, 3), (0, 1))
    with pytest.raises(ValueError):
        triangle_distance(ts, (0, 3), (0, 1))


def test_k4_balls(k4):
    ts = enumerate_triangles(k4)
    assert triangle_distance(ts, (0, 1), (2, 3)) == 2
    b0 = local_ball(ts, (0, 1), 0)
    assert b0.edge_set == {(0, 1)} and b0.tree_flag
    b1 = local_ball(ts, (0, 1), 1)
    assert len(b1.edges) == 5 and b1.tree_flag
    assert b1.tree.num_triangles == 2
    b2 = local_ball(ts, (0, 1), 2)
    assert len(b2.edges) == 6 and not b2.tree_flag


def test_bfs_on_k4(k4):
    ts = enumerate_triangles(k4)
    tree = bfs_triangle_tree(ts, (0, 1))
    assert [t.vertices for t in tree.triangles] == [(0, 1, 2), (0, 1, 3)]
    assert set(tree.edges) < k4.edge_set


def test_bfs_tree_stays_in_the_component():
    g = sample_gnp(GnpParams.from_d(200, 2.0, 11))
    ts = enumerate_triangles(g)
    for c in triangle_components(ts)[:30]:
        e = ts.host.edge(int(c.edge_ids[0]))
        tree = bfs_triangle_tree(ts, e)
        assert tree.edge_set <= set(c.edges(ts))
        assert len(tree.vertices) == tree.num_triangles + 2
        # every triangle on the root edge starts a branch
        assert tree.depth_profile()[1:2] == [len(ts.triangles_on(e))] or not len(c.triangles)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.3, 3.0), st.integers(1, 4))
def test_tree_ball_equals_bfs_tree(seed, d, gamma):
    g = sample_gnp(GnpParams.from_d(60, d, seed))
    ts = enumerate_triangles(g)
    for e in map(tuple, g.edges[:10].tolist()):
        ball = local_ball(ts, e, gamma)
        if ball.tree_flag:
            bfs = bfs_triangle_tree(ts, e, gamma)
            assert bfs.triangle_set == ball.tree.triangle_set
            assert bfs.edge_set == ball.edge_set


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 4))
def test_balls_are_nested(seed, gamma):
    g = sample_gnp(GnpParams.from_d(50, 2.0, seed))
    ts = enumerate_triangles(g)
    e = tuple(g.edges[0].tolist()) if g.m else None
    if e is None:
        return
    small, big = local_ball(ts, e, gamma), local_ball(ts, e, gamma + 1)
    assert small.edge_set <= big.edge_set
    for f, k in big.edges.items():
        assert (k <= gamma) == (f in small.edges)
        assert triangle_distance(ts, e, f) == k
    # once the ball is not a tree, bigger balls are not trees either
    if not small.tree_flag:
        assert not big.tree_flag


def test_grow_tree_depths():
    tree = grow_tree((0, 1), [((0, 1), 2), ((0, 2), 3), ((0, 3), 4), ((0, 1), 5)])
    assert [t.depth for t in tree.triangles] == [1, 2, 3, 1]
    assert tree.depth_profile() == [0, 2, 1, 1]
    assert tree.edge_depth((0, 4)) == 3 and tree.edge_depth((0, 1)) == 0
    assert tree.truncate(2).num_triangles == 3
    assert tree.truncate(0).num_triangles == 0


def test_tree_validation_rejects_bad_input():
    with pytest.raises(ValueError):
        TriangleTree((0, 1), (TreeTriangle((0, 1, 2), None, (0, 2), 1),))
    with pytest.raises(ValueError):
        TriangleTree((0, 1), (TreeTriangle((0, 1, 2), None, (0, 1), 1),
                              TreeTriangle((0, 1, 2), None, (0, 1), 1)))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 60), st.integers(0, 10**6))
def test_random_trees_are_trees(k, seed):
    tree = random_tree(k, seed)
    assert tree.num_triangles == k
    assert len(tree.edges) == 2 * k + 1 and len(tree.vertices) == k + 2
    assert TriangleTree.from_dict(tree.to_dict()) == tree
    g, relabel = tree.to_graph()
    ts = enumerate_triangles(g)
    assert len(ts) == k
    if k:
        root = (relabel[tree.root[0]], relabel[tree.root[1]])
        ball = local_ball(ts, root, math.inf)
        assert ball.tree_flag and len(ball.edges) == g.m
