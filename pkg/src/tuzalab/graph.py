"""Graphs, seeded G(n, p) sampling and triangle enumeration."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .rng import make_generator

Edge = tuple[int, int]

# average degree at or above which enumeration uses the dense bit-matrix path
DENSE_DEGREE = 4.0
DENSE_MAX_N = 20_000


def canon(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    ``edges`` is an ``(m, 2)`` read-only int64 array of ``(u, v)`` rows with
    ``u < v``, sorted lexicographically.  Use :meth:`from_edges` to build one
    from arbitrary pairs.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        if len(e):
            if (e[:, 0] >= e[:, 1]).any():
                raise ValueError("edges must be (u, v) rows with u < v")
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            keys = e[:, 0] * self.n + e[:, 1]
            if (np.diff(keys) <= 0).any():
                raise ValueError("edges must be sorted and duplicate-free")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Graph":
        rows = []
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            rows.append(canon(u, v))
        arr = np.array(sorted(rows), dtype=np.int64).reshape(-1, 2)
        if len(arr) and (np.diff(arr[:, 0] * max(n, 1) + arr[:, 1]) == 0).any():
            raise ValueError("duplicate edge")
        return cls(n, arr)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        iu = np.triu_indices(n, 1)
        return cls(n, np.column_stack(iu))

    # -- basic queries -------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def keys(self) -> np.ndarray:
        return self.edges[:, 0] * self.n + self.edges[:, 1]

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` of the symmetric adjacency, rows sorted."""
        both = np.concatenate([self.edges, self.edges[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(both[:, 0], minlength=self.n), out=indptr[1:])
        return indptr, both[:, 1].copy()

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.csr[0])

    def neighbors(self, v: int) -> np.ndarray:
        ptr, idx = self.csr
        return idx[ptr[v]:ptr[v + 1]]

    @cached_property
    def adjacency_sets(self) -> list[set[int]]:
        ptr, idx = self.csr
        return [set(idx[ptr[v]:ptr[v + 1]].tolist()) for v in range(self.n)]

    @cached_property
    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        a[self.edges[:, 0], self.edges[:, 1]] = True
        a[self.edges[:, 1], self.edges[:, 0]] = True
        return a

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(map(tuple, self.edges.tolist()))

    def has_edge(self, u: int, v: int) -> bool:
        return self.edge_id(u, v) >= 0

    def edge_id(self, u: int, v: int) -> int:
        """Row index of edge ``uv`` or -1 when absent."""
        u, v = canon(int(u), int(v))
        if u < 0 or v >= self.n or u == v:
            return -1
        k = u * self.n + v
        i = int(np.searchsorted(self.keys, k))
        return i if i < self.m and self.keys[i] == k else -1

    def edge_ids(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`edge_id` for pairs already satisfying ``u < v``."""
        k = np.asarray(u, dtype=np.int64) * self.n + np.asarray(v, dtype=np.int64)
        if self.m == 0:
            return np.full(k.shape, -1, dtype=np.int64)
        i = np.minimum(np.searchsorted(self.keys, k), self.m - 1)
        return np.where(self.keys[i] == k, i, -1).astype(np.int64)

    def edge(self, i: int) -> Edge:
        u, v = self.edges[i]
        return int(u), int(v)

    # -- equality and serialization -----------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": self.edges.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls.from_edges(int(data["n"]), data["edges"])

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_edgelist(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [f"{u} {v}" for u, v in self.edges.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "Graph":
        tokens = text.split()
        if len(tokens) < 2:
            raise ValueError("edge list needs a header line 'n m'")
        n, m = int(tokens[0]), int(tokens[1])
        body = tokens[2:]
        if len(body) != 2 * m:
            raise ValueError(f"header announces {m} edges, found {len(body) / 2:g}")
        pairs = [(int(body[2 * i]), int(body[2 * i + 1])) for i in range(m)]
        for u, v in pairs:
            if not u < v:
                raise ValueError(f"edge line '{u} {v}' must satisfy u < v")
        return cls.from_edges(n, pairs)

    def write_edgelist(self, path) -> None:
        Path(path).write_text(self.to_edgelist())

    @classmethod
    def read_edgelist(cls, path) -> "Graph":
        return cls.from_edgelist(Path(path).read_text())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class GnpParams:
    n: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @classmethod
    def from_d(cls, n: int, d: float, seed: int = 0) -> "GnpParams":
        """Choose ``p`` so that ``(n - 2) p^2 = d``."""
        if n < 3:
            raise ValueError("need n >= 3 to set d")
        return cls(n, math.sqrt(d / (n - 2)), seed)

    @property
    def m(self) -> float:
        return math.comb(self.n, 2) * self.p

    @property
    def d(self) -> float:
        return (self.n - 2) * self.p**2


def sample_gnp(params: GnpParams, chunk: int = 1 << 22) -> Graph:
    """Sample ``G(n, p)``; the pair of lexicographic rank k reads uniform k."""
    n, p = params.n, params.p
    if n < 2:
        raise ValueError("G(n, p) needs n >= 2")
    gen = make_generator(params.seed)
    row_len = np.arange(n - 1, 0, -1, dtype=np.int64)  # pairs starting at u
    offsets = np.concatenate([[0], np.cumsum(row_len)])
    total = int(offsets[-1])
    found = []
    start = 0
    while start < total:
        count = min(chunk, total - start)
        hit = np.flatnonzero(gen.random(count) < p) + start
        u = np.searchsorted(offsets, hit, side="right") - 1
        v = u + 1 + (hit - offsets[u])
        found.append(np.column_stack([u, v]))
        start += count
    edges = np.concatenate(found) if found else np.zeros((0, 2), np.int64)
    return Graph(n, edges)


def pair_rank(n: int, u: int, v: int) -> int:
    """Lexicographic rank of the pair ``u < v`` among all pairs of ``[n]``."""
    return u * n - u * (u + 1) // 2 + (v - u - 1)


@dataclass(frozen=True, eq=False)
class TriangleSystem:
    """Triangles of a host graph with edge/triangle incidence.

    ``triangles`` holds ascending vertex triples in lexicographic order and
    ``tri_edges`` the ids of their edges ``ab, ac, bc``.  The incidence is
    stored CSR style: the triangles on edge ``e`` are
    ``inc_idx[inc_ptr[e]:inc_ptr[e + 1]]`` in increasing order.
    """

    host: Graph
    triangles: np.ndarray
    tri_edges: np.ndarray
    inc_ptr: np.ndarray
    inc_idx: np.ndarray

    @classmethod
    def from_triangles(cls, host: Graph, triangles: np.ndarray) -> "TriangleSystem":
        tri = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(tri):
            order = np.lexsort((tri[:, 2], tri[:, 1], tri[:, 0]))
            tri = tri[order]
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        te = np.column_stack([host.edge_ids(a, b), host.edge_ids(a, c), host.edge_ids(b, c)])
        if (te < 0).any():
            raise ValueError("triangle uses a non-edge of the host")
        flat = te.ravel()
        order = np.argsort(flat, kind="stable")
        inc_idx = order // 3
        inc_ptr = np.zeros(host.m + 1, dtype=np.int64)
        np.cumsum(np.bincount(flat, minlength=host.m), out=inc_ptr[1:])
        for arr in (tri, te, inc_ptr, inc_idx):
            arr.setflags(write=False)
        return cls(host, tri, te, inc_ptr, inc_idx)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def __len__(self):
        return len(self.triangles)

    @cached_property
    def load(self) -> np.ndarray:
        """Number of triangles on each edge."""
        return np.diff(self.inc_ptr)

    def resolve_edge(self, e) -> int:
        if isinstance(e, (int, np.integer)):
            i = int(e)
            if not 0 <= i < self.host.m:
                raise ValueError(f"edge id {i} out of range")
            return i
        u, v = e
        i = self.host.edge_id(u, v)
        if i < 0:
            raise ValueError(f"{tuple(e)} is not an edge of the host")
        return i

    def triangles_on(self, e) -> np.ndarray:
        i = self.resolve_edge(e)
        return self.inc_idx[self.inc_ptr[i]:self.inc_ptr[i + 1]]

    @cached_property
    def triangle_index(self) -> dict[tuple[int, int, int], int]:
        return {t: i for i, t in enumerate(map(tuple, self.triangles.tolist()))}

    @property
    def incidence(self) -> dict[Edge, list[int]]:
        """Edge -> sorted triangle indices, for every edge of the host."""
        out = {}
        for e in range(self.host.m):
            out[self.host.edge(e)] = self.inc_idx[self.inc_ptr[e]:self.inc_ptr[e + 1]].tolist()
        return out

    def triangles_at_vertex(self, v: int) -> np.ndarray:
        return np.flatnonzero((self.triangles == v).any(axis=1))

    def to_dict(self) -> dict:
        return {
            "n": self.host.n,
            "edges": self.host.edges.tolist(),
            "triangles": self.triangles.tolist(),
            "incidence": [self.inc_idx[self.inc_ptr[e]:self.inc_ptr[e + 1]].tolist()
                          for e in range(self.host.m)],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "TriangleSystem":
        ts = cls.from_triangles(Graph.from_dict(data), np.array(data["triangles"], dtype=np.int64))
        if "incidence" in data and ts.to_dict()["incidence"] != data["incidence"]:
            raise ValueError("incidence does not match the triangles")
        return ts


def _triangles_dense(g: Graph) -> np.ndarray:
    a = g.dense
    out = []
    for u in range(g.n):
        up = g.neighbors(u)
        up = up[up > u]
        if len(up) < 2:
            continue
        sub = np.triu(a[np.ix_(up, up)], 1)
        i, j = np.nonzero(sub)
        if len(i):
            out.append(np.column_stack([np.full(len(i), u), up[i], up[j]]))
    return np.concatenate(out) if out else np.zeros((0, 3), np.int64)


def _triangles_sparse(g: Graph) -> np.ndarray:
    adj = g.adjacency_sets
    out = []
    for u, v in g.edges.tolist():
        for w in sorted(adj[u] & adj[v]):
            if w > v:
                out.append((u, v, w))
    return np.array(out, dtype=np.int64).reshape(-1, 3)


def enumerate_triangles(g: Graph, method: str = "auto") -> TriangleSystem:
    """All triangles of ``g``.

    ``method`` is ``"dense"`` (bit-matrix slices over upper neighbourhoods),
    ``"sparse"`` (sorted neighbour-set intersection per edge) or ``"auto"``,
    which picks dense once the average degree reaches ``DENSE_DEGREE``.
    """
    if method == "auto":
        avg_deg = 2 * g.m / g.n if g.n else 0.0
        method = "dense" if avg_deg >= DENSE_DEGREE and g.n <= DENSE_MAX_N else "sparse"
    if method == "dense":
        tri = _triangles_dense(g)
    elif method == "sparse":
        tri = _triangles_sparse(g)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TriangleSystem.from_triangles(g, tri)


def count_isolated_triangles(ts: TriangleSystem) -> int:
    """Triangles sharing no edge with any other triangle."""
    if not len(ts):
        return 0
    return int((ts.load[ts.tri_edges] == 1).all(axis=1).sum())


def expected_isolated_triangles(n: int, p: float) -> float:
    return math.comb(n, 3) * p**3 * (1 - 3 * p**2 + 2 * p**3) ** (n - 3)


def disjoint_union(*graphs: Graph) -> Graph:
    pairs, shift = [], 0
    for g in graphs:
        pairs.extend((u + shift, v + shift) for u, v in g.edges.tolist())
        shift += g.n
    return Graph.from_edges(shift, pairs)
