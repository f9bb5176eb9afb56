"""Idealised local limits: the Poisson triangle-tree S^d and its decreasing part T^d.

S^d starts from a root edge; every edge independently spawns Po(d) triangles,
each adding a fresh vertex and two fresh edges.  T^d additionally gives every
triangle a uniform weight and keeps only triangles whose weight is below that
of the triangle that created their base (the root counts as weight 1).

Depths follow the tree convention: triangles on the root have depth 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .graph import Edge, GnpParams, canon
from .randomized import WeightAssignment, survival
from .rng import UniformStream, make_generator
from .structure import LocalBall, TreeTriangle, TriangleTree, ball_from_adjacency


@dataclass(frozen=True)
class GWParams:
    d: float
    depth_cap: int = 40
    node_cap: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not self.d >= 0:
            raise ValueError("d must be non-negative")
        if self.depth_cap < 1 or self.node_cap < 1:
            raise ValueError("caps must be positive")


@dataclass(frozen=True)
class GWOutcome:
    tree: TriangleTree
    truncated: bool
    depth_profile: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class SurvivalEstimate:
    trials: int
    survivals: int
    point: float
    ci95: tuple[float, float]
    truncation_rate: float

    def contains(self, x: float) -> bool:
        return self.ci95[0] <= x <= self.ci95[1]


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def survival_probability(d: float) -> float:
    return (2 * d + 1) ** -0.5


def _grow(params: GWParams, stream: UniformStream, weighted: bool, thin: bool):
    """Breadth-first sampler shared by S^d, weighted S^d and T^d."""
    root = (0, 1)
    queue = [(root, 0, None, 1.0)]  # edge, depth, creating triangle, weight
    tris: list[TreeTriangle] = []
    weights: list[float] = []
    nxt_vertex = 2
    truncated = False
    head = 0
    while head < len(queue) and not (truncated and len(tris) >= params.node_cap):
        e, depth, parent, x = queue[head]
        head += 1
        k = stream.poisson(params.d)
        for _ in range(k):
            u = stream.random() if weighted else 1.0
            if thin and u >= x:
                continue
            if depth + 1 > params.depth_cap or len(tris) >= params.node_cap:
                truncated = True
                continue
            z = nxt_vertex
            nxt_vertex += 1
            a, b = e
            tris.append(TreeTriangle((a, b, z), parent, e, depth + 1))
            weights.append(u)
            idx = len(tris) - 1
            queue.append((canon(a, z), depth + 1, idx, u))
            queue.append((canon(b, z), depth + 1, idx, u))
    tree = TriangleTree(root, tuple(tris))
    prof = [0] * (params.depth_cap + 1)
    for t in tris:
        prof[t.depth] += 1
    return GWOutcome(tree, truncated, prof), np.array(weights)


def sample_gw_tree(params: GWParams, stream: UniformStream | None = None) -> GWOutcome:
    stream = stream or UniformStream(params.seed)
    return _grow(params, stream, weighted=False, thin=False)[0]


def sample_gw_weighted(params: GWParams, stream: UniformStream | None = None):
    """S^d together with i.i.d. uniform triangle weights."""
    stream = stream or UniformStream(params.seed)
    out, w = _grow(params, stream, weighted=True, thin=False)
    return out, WeightAssignment(w)


def sample_td_tree(params: GWParams, stream: UniformStream | None = None):
    """T^d by thinning: a child on an edge of weight x is kept iff its weight is below x."""
    stream = stream or UniformStream(params.seed)
    out, w = _grow(params, stream, weighted=True, thin=True)
    return out, WeightAssignment(w)


def decreasing_part(outcome: GWOutcome, w: WeightAssignment):
    """The T^d inside a weighted S^d: triangles reached with decreasing weights."""
    tris = outcome.tree.triangles
    keep = {}
    out: list[TreeTriangle] = []
    kept_w = []
    for i, t in enumerate(tris):
        ok = w.weights[i] < (1.0 if t.parent is None else w.weights[t.parent])
        if ok and (t.parent is None or t.parent in keep):
            keep[i] = len(out)
            out.append(TreeTriangle(t.vertices, None if t.parent is None else keep[t.parent],
                                    t.base, t.depth))
            kept_w.append(w.weights[i])
    tree = TriangleTree(outcome.tree.root, tuple(out))
    prof = [0] * len(outcome.depth_profile)
    for t in out:
        prof[t.depth] += 1
    return GWOutcome(tree, outcome.truncated, prof), WeightAssignment(np.array(kept_w)), sorted(keep)


def depth_profiles(params: GWParams, trials: int, kind: str = "S") -> tuple[np.ndarray, int]:
    """Per-trial triangle counts by depth (columns 0..depth_cap) and the truncation count."""
    stream = UniformStream(params.seed)
    rows = np.zeros((trials, params.depth_cap + 1), dtype=np.int64)
    cut = 0
    for t in range(trials):
        if kind == "S":
            out = sample_gw_tree(params, stream)
        elif kind == "T":
            out = sample_td_tree(params, stream)[0]
        else:
            raise ValueError(f"unknown kind {kind!r}")
        rows[t] = out.depth_profile
        cut += out.truncated
    return rows, cut


def expected_profile(d: float, i: int, kind: str = "S") -> float:
    if kind == "S":
        return (2 * d) ** i / 2
    return (2 * d) ** i / (2 * math.factorial(i))


class _Truncated(Exception):
    pass


def _lazy_root_survives(d: float, stream: UniformStream, depth_cap: int) -> bool:
    """Root survival in T^d, generating only what the rule needs.

    An edge of weight x has Po(d x) child triangles with weights uniform on
    (0, x).  The edge dies as soon as one child has both child edges alive,
    so later children and the second child edge are only drawn when needed.
    """

    def survives(x: float, depth: int) -> bool:
        k = stream.poisson(d * x)
        if k and depth >= depth_cap:
            raise _Truncated
        for _ in range(k):
            u = x * stream.random()
            if survives(u, depth + 1) and survives(u, depth + 1):
                return False
        return True

    return survives(1.0, 0)


def estimate_root_survival(params: GWParams, trials: int, method: str = "lazy") -> SurvivalEstimate:
    """Monte Carlo root survival in T^d with a Wilson 95% interval.

    ``method="tree"`` samples whole trees and applies :func:`survival`;
    ``"lazy"`` draws the same law on demand and is the only option for d
    beyond about 4, where T^d has on the order of e^{2d} triangles.
    Trials that hit a cap are excluded and reported as the truncation rate.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    stream = UniformStream(params.seed)
    alive = used = 0
    for _ in range(trials):
        if method == "lazy":
            try:
                ok = _lazy_root_survives(params.d, stream, params.depth_cap)
            except _Truncated:
                continue
        elif method == "tree":
            out, w = sample_td_tree(params, stream)
            if out.truncated:
                continue
            ok = survival(out.tree, w.weights)[out.tree.root]
        else:
            raise ValueError(f"unknown method {method!r}")
        used += 1
        alive += ok
    if used == 0:
        return SurvivalEstimate(0, 0, float("nan"), (0.0, 1.0), 1.0)
    return SurvivalEstimate(used, alive, alive / used, wilson_interval(alive, used),
                            1 - used / trials)


def tv_bin_poisson(n: int, c: int, p: float, tail: float = 1e-12) -> float:
    """Total variation between Bin(n + c, p) and Po(n p) by direct summation."""
    N = n + c
    if N < 0:
        raise ValueError("n + c must be non-negative")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if p == 0:
        return 0.0
    lam = n * p
    B = stats.binom(N, p)
    P = stats.poisson(lam)
    kmax = int(max(B.isf(tail), P.isf(tail), 1)) + 1
    k = np.arange(kmax + 1)
    while B.cdf(kmax) < 1 - tail or P.cdf(kmax) < 1 - tail:
        kmax *= 2
        k = np.arange(kmax + 1)
    a = B.pmf(k)
    b = P.pmf(k)
    rest = max(1 - a.sum(), 0.0) + max(1 - b.sum(), 0.0)
    return 0.5 * (math.fsum(np.abs(a - b)) + rest)


# -- local law in G(n, p) versus S^d ------------------------------------------------------


class LazyGnp:
    """G(n, p) conditioned on the edge (0, 1), revealed one vertex row at a time."""

    def __init__(self, n: int, p: float, rng: np.random.Generator):
        self.n, self.p, self.rng = n, p, rng
        self.adj: dict[int, set[int]] = {0: {1}, 1: {0}}
        self.revealed = np.zeros(n, dtype=bool)
        self.rows = 0

    def nbrs(self, v: int) -> set[int]:
        if not self.revealed[v]:
            hit = self.rng.random(self.n) < self.p
            hit[self.revealed] = False
            hit[v] = False
            if v in (0, 1):
                hit[1 - v] = False  # already decided
            self.revealed[v] = True
            self.rows += 1
            row = self.adj.setdefault(v, set())
            for u in np.flatnonzero(hit).tolist():
                row.add(u)
                self.adj.setdefault(u, set()).add(v)
        return self.adj[v]


@dataclass(frozen=True)
class LocalLawReport:
    d: float
    gamma: int
    trials: int
    tv_triangle_count: float
    mean_count_graph: float
    mean_count_gw: float
    profile_graph: list[float]
    profile_gw: list[float]
    tree_rate_graph: float
    tree_rate_gw: float


def _tv(a: np.ndarray, b: np.ndarray) -> float:
    top = int(max(a.max(initial=0), b.max(initial=0))) + 1
    pa = np.bincount(a, minlength=top) / len(a)
    pb = np.bincount(b, minlength=top) / len(b)
    return 0.5 * float(np.abs(pa - pb).sum())


def sample_ball(gp: GnpParams, gamma: int, rng: np.random.Generator) -> LocalBall:
    g = LazyGnp(gp.n, gp.p, rng)
    return ball_from_adjacency(g.nbrs, (0, 1), gamma)


def compare_local_law(gp: GnpParams, gw: GWParams, gamma: int, trials: int,
                      rtol: float = 1e-9) -> LocalLawReport:
    """Independent samples of ``S_gamma(xy)`` in G(n, p) and of S^d truncated at gamma."""
    if not math.isclose(gp.d, gw.d, rel_tol=rtol, abs_tol=1e-12):
        raise ValueError(f"densities differ: {gp.d} vs {gw.d}")
    rng = make_generator(gp.seed)
    cap = GWParams(gw.d, depth_cap=gamma, node_cap=gw.node_cap, seed=gw.seed)
    stream = UniformStream(gw.seed)
    cg = np.zeros(trials, dtype=np.int64)
    cs = np.zeros(trials, dtype=np.int64)
    pg = np.zeros((trials, gamma + 1))
    ps = np.zeros((trials, gamma + 1))
    trees = 0
    for t in range(trials):
        ball = sample_ball(gp, gamma, rng)
        cg[t] = len(ball.triangles)
        prof = ball.depth_profile()
        pg[t, :len(prof)] = prof[:gamma + 1]
        trees += ball.tree_flag
        out = sample_gw_tree(cap, stream)
        cs[t] = out.tree.num_triangles
        ps[t] = out.depth_profile[:gamma + 1]
    return LocalLawReport(gw.d, gamma, trials, _tv(cg, cs), float(cg.mean()), float(cs.mean()),
                          pg.mean(axis=0)[1:].tolist(), ps.mean(axis=0)[1:].tolist(),
                          trees / trials, 1.0)
