"""Triangle connectivity: components, distances, local balls and BFS trees."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .graph import Edge, Graph, TriangleSystem, canon
from .rng import make_generator

Tri = tuple[int, int, int]


@dataclass(frozen=True)
class TreeTriangle:
    vertices: Tri
    parent: int | None
    base: Edge
    depth: int

    @property
    def apex(self) -> int:
        return next(v for v in self.vertices if v not in self.base)

    @property
    def children_edges(self) -> tuple[Edge, Edge]:
        a, b = self.base
        z = self.apex
        return canon(a, z), canon(b, z)


@dataclass(frozen=True)
class TriangleTree:
    """A rooted triangle-tree.

    Triangles are listed in insertion order; each is glued onto an already
    present edge (its ``base``) with a fresh apex vertex, and its depth is one
    more than the depth of the base (the root edge has depth 0).
    """

    root: Edge
    triangles: tuple[TreeTriangle, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "root", canon(*self.root))
        self.validate()

    def validate(self) -> None:
        depth = {self.root: 0}
        seen = set(self.root)
        for i, t in enumerate(self.triangles):
            if tuple(sorted(t.vertices)) != t.vertices or len(set(t.vertices)) != 3:
                raise ValueError(f"triangle {i} is not an ascending triple")
            base = canon(*t.base)
            if base not in depth:
                raise ValueError(f"triangle {i} is glued onto an edge not yet in the tree")
            if not set(base) <= set(t.vertices):
                raise ValueError(f"triangle {i} does not contain its base")
            z = t.apex
            if z in seen:
                raise ValueError(f"triangle {i} reuses vertex {z}")
            if t.depth != depth[base] + 1:
                raise ValueError(f"triangle {i} has depth {t.depth}, expected {depth[base] + 1}")
            if t.parent is None:
                if base != self.root:
                    raise ValueError(f"triangle {i} has no parent but is not on the root")
            else:
                if not 0 <= t.parent < i or base not in self.triangles[t.parent].children_edges:
                    raise ValueError(f"triangle {i} has an inconsistent parent")
            seen.add(z)
            for e in t.children_edges:
                depth[e] = t.depth

    # -- derived structure ---------------------------------------------------

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        out = [self.root]
        for t in self.triangles:
            out.extend(t.children_edges)
        return tuple(out)

    @cached_property
    def edge_info(self) -> dict[Edge, tuple[Edge, int, int]]:
        """Non-root edge -> (base edge, depth, index of the triangle creating it)."""
        return {e: (t.base, t.depth, i)
                for i, t in enumerate(self.triangles) for e in t.children_edges}

    @cached_property
    def vertices(self) -> tuple[int, ...]:
        return tuple(self.root) + tuple(t.apex for t in self.triangles)

    @cached_property
    def children(self) -> dict[Edge, list[int]]:
        """Edge -> indices of the triangles based at it."""
        out = {e: [] for e in self.edges}
        for i, t in enumerate(self.triangles):
            out[t.base].append(i)
        return out

    def edge_depth(self, e: Edge) -> int:
        e = canon(*e)
        return 0 if e == self.root else self.edge_info[e][1]

    @property
    def depth(self) -> int:
        return max((t.depth for t in self.triangles), default=0)

    def depth_profile(self) -> list[int]:
        """Entry i counts triangles of depth i (entry 0 is always 0)."""
        prof = [0] * (self.depth + 1)
        for t in self.triangles:
            prof[t.depth] += 1
        return prof

    @property
    def triangle_set(self) -> frozenset[Tri]:
        return frozenset(t.vertices for t in self.triangles)

    @property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def truncate(self, gamma: float) -> "TriangleTree":
        keep = [t for t in self.triangles if t.depth <= gamma]
        # depth-monotone insertion keeps parents before children, indices shift
        remap, out = {}, []
        for i, t in enumerate(self.triangles):
            if t.depth <= gamma:
                remap[i] = len(out)
                out.append(TreeTriangle(t.vertices, None if t.parent is None else remap[t.parent],
                                        t.base, t.depth))
        assert len(out) == len(keep)
        return TriangleTree(self.root, tuple(out))

    def to_graph(self) -> tuple[Graph, dict[int, int]]:
        """The tree as a host graph on ``0..k+1``; also returns old -> new labels."""
        relabel = {v: i for i, v in enumerate(self.vertices)}
        g = Graph.from_edges(len(relabel), [(relabel[u], relabel[v]) for u, v in self.edges])
        return g, relabel

    def to_dict(self) -> dict:
        return {
            "root": list(self.root),
            "triangles": [
                {"vertices": list(t.vertices), "parent": t.parent,
                 "base": list(t.base), "depth": t.depth}
                for t in self.triangles
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TriangleTree":
        tris = tuple(
            TreeTriangle(tuple(t["vertices"]), t["parent"], tuple(t["base"]), int(t["depth"]))
            for t in data["triangles"]
        )
        return cls(tuple(data["root"]), tris)


def grow_tree(root: Edge, steps: Iterable[tuple[Edge, int]]) -> TriangleTree:
    """Build a tree by gluing fresh vertex ``z`` onto edge ``e`` for each ``(e, z)``."""
    root = canon(*root)
    depth = {root: (0, None)}
    tris = []
    for e, z in steps:
        e = canon(*e)
        d, parent = depth[e]
        a, b = e
        tris.append(TreeTriangle(tuple(sorted((a, b, z))), parent, e, d + 1))
        for f in (canon(a, z), canon(b, z)):
            depth[f] = (d + 1, len(tris) - 1)
    return TriangleTree(root, tuple(tris))


def random_tree(k: int, seed: int) -> TriangleTree:
    """``k`` triangles, each glued onto a uniformly chosen existing edge."""
    rng = make_generator(seed)
    edges = [(0, 1)]
    steps = []
    for z in range(2, k + 2):
        e = edges[int(rng.integers(len(edges)))]
        steps.append((e, z))
        edges.extend((canon(e[0], z), canon(e[1], z)))
    return grow_tree((0, 1), steps)


# -- components ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TriangleComponent:
    edge_ids: np.ndarray
    triangles: np.ndarray

    @property
    def trivial(self) -> bool:
        return len(self.triangles) == 0

    def edges(self, ts: TriangleSystem) -> list[Edge]:
        return [ts.host.edge(int(e)) for e in self.edge_ids]


def triangle_components(ts: TriangleSystem) -> list[TriangleComponent]:
    """Partition the edges into triangle-components, ordered by least edge id."""
    m = ts.host.m
    if m == 0:
        return []
    te = ts.tri_edges
    rows = np.concatenate([te[:, 0], te[:, 0]])
    cols = np.concatenate([te[:, 1], te[:, 2]])
    adj = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(m, m))
    _, labels = connected_components(adj, directed=False)
    # relabel by first appearance so component order follows edge order
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    lab = rank[labels]
    edge_groups = np.argsort(lab, kind="stable")
    edge_bounds = np.searchsorted(lab[edge_groups], np.arange(len(order) + 1))
    tri_lab = lab[te[:, 0]] if len(te) else np.zeros(0, np.int64)
    tri_groups = np.argsort(tri_lab, kind="stable")
    tri_bounds = np.searchsorted(tri_lab[tri_groups], np.arange(len(order) + 1))
    return [
        TriangleComponent(edge_groups[edge_bounds[c]:edge_bounds[c + 1]],
                          tri_groups[tri_bounds[c]:tri_bounds[c + 1]])
        for c in range(len(order))
    ]


def subsystem(ts: TriangleSystem, tri_idx: np.ndarray) -> tuple[TriangleSystem, np.ndarray]:
    """The triangle system spanned by a subset of triangles.

    Returns the new system (on the union of their edges, original vertex
    labels) and, for each of its triangles, the index in ``ts``.
    """
    tri_idx = np.sort(np.asarray(tri_idx, dtype=np.int64))
    eids = np.unique(ts.tri_edges[tri_idx].ravel())
    host = Graph(ts.host.n, ts.host.edges[eids])
    sub = TriangleSystem.from_triangles(host, ts.triangles[tri_idx])
    return sub, tri_idx


# -- distances and balls -----------------------------------------------------------


def _element_triangles(ts: TriangleSystem, a) -> set[int]:
    if isinstance(a, (int, np.integer)):
        if not 0 <= int(a) < ts.host.n:
            raise ValueError(f"vertex {a} not in host")
        return set(ts.triangles_at_vertex(int(a)).tolist())
    a = tuple(int(x) for x in a)
    if len(a) == 2:
        return set(ts.triangles_on(a).tolist())
    if len(a) == 3:
        key = tuple(sorted(a))
        if key not in ts.triangle_index:
            raise ValueError(f"{a} is not a triangle of the host")
        return {ts.triangle_index[key]}
    raise ValueError(f"cannot interpret element {a!r}")


def _normalise(a):
    if isinstance(a, (int, np.integer)):
        return int(a)
    return tuple(sorted(int(x) for x in a))


def triangle_distance(ts: TriangleSystem, a, b) -> float:
    """Fewest triangles on a triangle-path joining elements ``a`` and ``b``.

    Elements are vertices (ints), edges (pairs) or triangles (triples).
    Identical elements are at distance 0; ``math.inf`` means unreachable.
    """
    start = _element_triangles(ts, a)
    target = _element_triangles(ts, b)
    if _normalise(a) == _normalise(b):
        return 0
    seen = set(start)
    frontier = sorted(start)
    level = 1
    while frontier:
        if target.intersection(frontier):
            return level
        nxt = []
        for t in frontier:
            for e in ts.tri_edges[t]:
                for s in ts.inc_idx[ts.inc_ptr[e]:ts.inc_ptr[e + 1]]:
                    s = int(s)
                    if s not in seen:
                        seen.add(s)
                        nxt.append(s)
        frontier = nxt
        level += 1
    return math.inf


@dataclass(frozen=True)
class LocalBall:
    """Edges within triangle-distance ``gamma`` of ``center``.

    ``edges`` maps each ball edge to its distance from the centre and
    ``triangles`` maps each triangle met on the way to its level (the length
    of a shortest path from the centre ending in it).
    """

    center: Edge
    gamma: float
    edges: dict[Edge, int]
    triangles: dict[Tri, int]
    tree: TriangleTree | None = field(default=None, compare=False)

    @property
    def tree_flag(self) -> bool:
        return self.tree is not None

    @property
    def content(self):
        return self.tree if self.tree is not None else frozenset(self.edges)

    @property
    def vertices(self) -> set[int]:
        return {v for e in self.edges for v in e}

    @property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @property
    def triangle_set(self) -> frozenset[Tri]:
        return frozenset(self.triangles)

    def depth_profile(self) -> list[int]:
        prof = [0] * (max(self.triangles.values(), default=0) + 1)
        for lev in self.triangles.values():
            prof[lev] += 1
        return prof


def is_tree_count(num_edges: int, num_vertices: int) -> bool:
    """Edge/vertex count test for triangle-connected graphs grown from an edge."""
    return num_edges - 1 == 2 * (num_vertices - 2)


def ball_from_adjacency(nbrs: Callable[[int], set[int]], center: Edge, gamma: float) -> LocalBall:
    """Breadth-first triangle exploration around ``center`` through ``nbrs``.

    ``nbrs(v)`` returns the neighbour set of ``v``; only vertices touched by
    the exploration are queried, so lazily revealed graphs work too.
    """
    x, y = canon(*center)
    dist = {(x, y): 0}
    tris: dict[Tri, int] = {}
    frontier = [(x, y)]
    level = 0
    while frontier and level < gamma:
        level += 1
        nxt = []
        for a, b in frontier:
            for c in sorted(nbrs(a) & nbrs(b)):
                t = tuple(sorted((a, b, c)))
                if t in tris:
                    continue
                tris[t] = level
                for e in (canon(a, c), canon(b, c)):
                    if e not in dist:
                        dist[e] = level
                        nxt.append(e)
        frontier = sorted(nxt)
    verts = {v for e in dist for v in e}
    tree = _ball_tree((x, y), dist, tris) if is_tree_count(len(dist), len(verts)) else None
    return LocalBall((x, y), gamma, dist, tris, tree)


def _ball_tree(root: Edge, dist: dict[Edge, int], tris: dict[Tri, int]) -> TriangleTree:
    order = sorted(tris, key=lambda t: (tris[t], t))
    made_by: dict[Edge, int] = {}
    out = []
    for t in order:
        lev = tris[t]
        a, b, c = t
        sides = [canon(a, b), canon(a, c), canon(b, c)]
        bases = [e for e in sides if dist[e] == lev - 1]
        if len(bases) != 1:
            raise AssertionError("ball passed the tree count test but is not a tree")
        base = bases[0]
        out.append(TreeTriangle(t, made_by.get(base), base, lev))
        for e in sides:
            if e != base:
                made_by[e] = len(out) - 1
    return TriangleTree(root, tuple(out))


def local_ball(ts: TriangleSystem, xy: Edge, gamma: float) -> LocalBall:
    """``S_gamma(xy)``: the edges of the component of ``xy`` within distance ``gamma``."""
    ts.resolve_edge(xy)
    adj = ts.host.adjacency_sets
    return ball_from_adjacency(adj.__getitem__, xy, gamma)


def bfs_triangle_tree(ts: TriangleSystem, xy: Edge, gamma: float = math.inf) -> TriangleTree:
    """Breadth-first triangle-tree grown from ``xy``, truncated at depth ``gamma``.

    Vertices are processed in the order they join the tree, ties by label.
    Processing ``v`` with base ``ab`` glues ``avw`` (then ``bvw``) for every
    ``w`` not yet in the tree; a ``w`` seen from both ``av`` and ``bv`` is
    attached to ``av`` only, since it is no longer outside the tree.
    """
    ts.resolve_edge(xy)
    return bfs_tree_from_adjacency(ts.host.adjacency_sets.__getitem__, xy, gamma)


def bfs_tree_from_adjacency(nbrs: Callable[[int], set[int]], xy: Edge,
                            gamma: float = math.inf) -> TriangleTree:
    x, y = canon(*xy)
    in_tree = {x, y}
    tris: list[TreeTriangle] = []
    owner: dict[int, int] = {}  # queued vertex -> its unique triangle
    queue: deque[int] = deque()
    if gamma >= 1:
        for z in sorted(nbrs(x) & nbrs(y)):
            tris.append(TreeTriangle(tuple(sorted((x, y, z))), None, (x, y), 1))
            owner[z] = len(tris) - 1
            in_tree.add(z)
            queue.append(z)
    while queue:
        v = queue.popleft()
        t = tris[owner[v]]
        if t.depth >= gamma:
            break  # depths along the queue never decrease
        entered = []
        for a in t.base:
            for w in sorted(nbrs(a) & nbrs(v)):
                if w in in_tree:
                    continue
                tris.append(TreeTriangle(tuple(sorted((a, v, w))), owner[v], canon(a, v), t.depth + 1))
                owner[w] = len(tris) - 1
                in_tree.add(w)
                entered.append(w)
        queue.extend(sorted(entered))
    return TriangleTree((x, y), tuple(tris))
