"""Randomized constructions on concrete graphs.

* greedy matching: scan triangles by increasing weight, keep a triangle
  when it shares no edge with those already kept;
* decreasing-weight trees ``T(e)`` and the survival rule that predicts which
  edges the greedy matching covers;
* the partition cover ``W = (W0 \\ W1) ∪ W2`` of a random 2-colouring;
* the heavy-edge fractional matching ``phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .exact import MatchingResult, is_cover_mask
from .graph import Edge, TriangleSystem, canon
from .rng import make_generator
from .structure import TriangleTree, _ball_tree, is_tree_count


@dataclass(frozen=True)
class WeightAssignment:
    """Triangle weights; equal weights are ordered by triangle index.

    Triangle indices follow the lexicographic order of the vertex triples,
    so the tie rule is lexicographic.
    """

    weights: np.ndarray

    @classmethod
    def from_seed(cls, ts: TriangleSystem, seed: int) -> "WeightAssignment":
        return cls(make_generator(seed).random(len(ts)))

    def order(self) -> np.ndarray:
        w = np.asarray(self.weights)
        return np.lexsort((np.arange(len(w)), w))

    def ranks(self) -> np.ndarray:
        r = np.empty(len(self.weights), dtype=np.int64)
        r[self.order()] = np.arange(len(self.weights))
        return r


def greedy_matching(ts: TriangleSystem, w: WeightAssignment) -> MatchingResult:
    used = np.zeros(ts.host.m, dtype=bool)
    te = ts.tri_edges
    chosen = []
    for i in w.order().tolist():
        a, b, c = te[i]
        if not (used[a] or used[b] or used[c]):
            used[a] = used[b] = used[c] = True
            chosen.append(i)
    chosen.sort()
    return MatchingResult(tuple(chosen), len(chosen), False)


def covered_edges(ts: TriangleSystem, matching: MatchingResult) -> np.ndarray:
    """Boolean edge mask of ``E(M)``."""
    mask = np.zeros(ts.host.m, dtype=bool)
    if matching.size:
        mask[ts.tri_edges[list(matching.triangles)].ravel()] = True
    return mask


# -- decreasing-weight trees and survival -------------------------------------------


@dataclass(frozen=True)
class DecreasingTree:
    root: Edge
    edges: dict[Edge, int]  # edge -> level it was reached at
    triangles: dict[int, int]  # host triangle index -> level
    tree: TriangleTree | None

    @property
    def tree_flag(self) -> bool:
        return self.tree is not None


def decreasing_weight_tree(ts: TriangleSystem, e: Edge, w: WeightAssignment,
                           gamma: float = math.inf) -> DecreasingTree:
    """Edges reachable from ``e`` along triangle paths of strictly decreasing weight.

    Whether a path can continue past a triangle depends only on that
    triangle's weight, so a breadth-first search over triangles finds every
    such path, each triangle at the smallest level it can be reached.
    """
    eid = ts.resolve_edge(e)
    rank = w.ranks()
    host = ts.host
    tris = {int(t): 1 for t in ts.triangles_on(eid)} if gamma >= 1 else {}
    frontier = sorted(tris)
    level = 1
    while frontier and level < gamma:
        level += 1
        nxt = []
        for a in frontier:
            for f in ts.tri_edges[a]:
                for b in ts.triangles_on(int(f)):
                    b = int(b)
                    if b not in tris and rank[b] < rank[a]:
                        tris[b] = level
                        nxt.append(b)
        frontier = sorted(nxt)
    root = canon(*e)
    dist = {root: 0}
    for t, lev in sorted(tris.items(), key=lambda kv: (kv[1], kv[0])):
        for f in ts.tri_edges[t]:
            dist.setdefault(host.edge(int(f)), lev)
    verts = {v for f in dist for v in f}
    tree = None
    if is_tree_count(len(dist), len(verts)):
        tree = _ball_tree(root, dist, {tuple(int(v) for v in ts.triangles[t]): lev
                                       for t, lev in tris.items()})
    return DecreasingTree(root, dist, tris, tree)


def induced_edge_weights(tree: TriangleTree, tri_weights) -> dict[Edge, float]:
    """Weight of each edge: that of the triangle that created it (root gets 1)."""
    out = {tree.root: 1.0}
    for t, x in zip(tree.triangles, tri_weights):
        for f in t.children_edges:
            out[f] = float(x)
    return out


def survival(tree: TriangleTree, weights=None, order: Iterable[Edge] | None = None) -> dict[Edge, bool]:
    """Survive (True) / die (False) for every edge of a triangle-tree.

    An edge dies iff some triangle based at it has both other edges alive.
    ``order`` must list every edge after the child edges of the triangles
    based at it.  Without an order, edges go by increasing induced weight
    when triangle ``weights`` are given, deepest first otherwise.
    """
    children = tree.children
    if order is None:
        if weights is not None:
            ew = induced_edge_weights(tree, weights)
            order = sorted(ew, key=lambda f: (ew[f], f))
        else:
            order = sorted(tree.edges, key=lambda f: (-tree.edge_depth(f), f))
    alive: dict[Edge, bool] = {}
    for f in order:
        f = canon(*f)
        dies = False
        for j in children.get(f, ()):
            c1, c2 = tree.triangles[j].children_edges
            if c1 not in alive or c2 not in alive:
                raise ValueError(f"edge {f} evaluated before its children")
            dies = dies or (alive[c1] and alive[c2])
        alive[f] = not dies
    if len(alive) != len(tree.edges):
        raise ValueError("order does not list every edge exactly once")
    return alive


# -- partition cover ---------------------------------------------------------------


@dataclass(frozen=True)
class PartitionCoverResult:
    partition: np.ndarray  # True for block X
    W0: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    W: np.ndarray

    @property
    def sizes(self) -> dict[str, int]:
        return {k: int(getattr(self, k).sum()) for k in ("W0", "W1", "W2", "W")}

    @property
    def size(self) -> int:
        return int(self.W.sum())


def random_partition(n: int, seed: int) -> np.ndarray:
    return make_generator(seed).random(n) < 0.5


def partition_cover(ts: TriangleSystem, partition=None, seed: int | None = None) -> PartitionCoverResult:
    host = ts.host
    if partition is None:
        if seed is None:
            raise ValueError("give a partition or a seed")
        partition = random_partition(host.n, seed)
    side = np.asarray(partition, dtype=bool)
    if side.shape != (host.n,):
        raise ValueError("partition must assign every vertex")
    u, v = host.edges[:, 0], host.edges[:, 1]
    W0 = side[u] == side[v]
    te = ts.tri_edges
    tv = ts.triangles
    mono = (side[tv[:, 0]] == side[tv[:, 1]]) & (side[tv[:, 1]] == side[tv[:, 2]])
    spoiled = np.zeros(host.m, dtype=bool)
    spoiled[te[~mono].ravel()] = True
    W1 = W0 & ~spoiled
    W2 = np.zeros(host.m, dtype=bool)
    if len(ts):
        in1 = W1[te]
        # edge j of a triangle joins W2 when the other two edges are in W1
        for j, (k, l) in enumerate(((1, 2), (0, 2), (0, 1))):
            hit = in1[:, j] & in1[:, k] & in1[:, l]
            W2[te[hit, j]] = True
    W = (W0 & ~W1) | W2
    if (W1 & ~W0).any() or (W2 & ~W1).any():
        raise AssertionError("partition cover sets are not nested")
    if not is_cover_mask(ts, W):
        raise AssertionError("partition cover misses a triangle")
    return PartitionCoverResult(side, W0, W1, W2, W)


# -- fractional matching --------------------------------------------------------------


@dataclass(frozen=True)
class FractionalMatching:
    D: float
    sigma: float
    values: np.ndarray
    total: float
    alpha: float
    heavy_edges: int
    heavy_triangles: int

    @property
    def heavy_fraction(self) -> float:
        n = len(self.values)
        return self.heavy_triangles / n if n else 0.0


def default_sigma(d: float) -> float:
    # capped so that small d still gives a slack inside (0, 1)
    return min(max(0.3, 2.0 / math.sqrt(d)), 0.9)


def fractional_matching(ts: TriangleSystem, d: float, sigma: float | None = None) -> FractionalMatching:
    """``phi = 1/D`` on triangles without heavy edges (load >= D), 0 elsewhere."""
    if d <= 0:
        raise ValueError("d must be positive")
    sigma = default_sigma(d) if sigma is None else float(sigma)
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    D = (1 + sigma) * d
    if D <= 1:
        raise ValueError(f"D = {D} <= 1 would give values above 1")
    heavy = ts.load >= D
    light = ~heavy[ts.tri_edges].any(axis=1) if len(ts) else np.zeros(0, dtype=bool)
    values = np.where(light, 1.0 / D, 0.0)
    # two edges share at most one triangle, so the pair maximum is one value
    alpha = 1.0 / D if light.any() else 0.0
    phi_load = np.zeros(ts.host.m)
    np.add.at(phi_load, ts.tri_edges.ravel(), np.repeat(values, 3))
    if (phi_load > 1 + 1e-12).any():
        raise AssertionError("fractional matching overloads an edge")
    return FractionalMatching(D, sigma, values, float(light.sum()) / D, alpha,
                              int(heavy.sum()), int((~light).sum()))
