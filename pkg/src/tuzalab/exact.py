"""Exact triangle matching (nu) and triangle cover (tau).

Both solvers work per triangle-component and run a depth-first
branch-and-bound inside each one.  Two bounding engines are available:

``bound="lp"`` (default)
    LP relaxations solved with HiGHS and warm-started between nodes.  The
    packing LP is strengthened by K4 clique rows, per-vertex rows
    ``sum_{A ∋ v} x_A <= floor(deg(v) / 2)`` and ``sum x <= floor(|E| / 3)``.
``bound="matching"``
    Pure combinatorial bounds on bitsets: a greedy packing bounds tau from
    below; nu is bounded above by a greedy cover, ``|E| / 3`` and the vertex
    degree count, and the search splits into conflict components as triangles
    are removed.  No LP solver needed, but only practical for d up to about 2
    at n = 30.

Budgets count branch-and-bound nodes (deterministic) and optionally wall
clock.  When a budget runs out the best solution found is returned with
``optimal=False`` and ``bound_gap`` set to the distance to the root bound.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix, vstack

from .graph import Edge, TriangleSystem, canon
from .structure import TriangleTree, triangle_components

EPS = 1e-6


class TuzaViolation(UserWarning):
    """Raised as a warning when an optimally solved instance has tau > 2 nu."""


@dataclass(frozen=True)
class Budget:
    nodes: int = 1_000_000
    seconds: float | None = None


@dataclass(frozen=True)
class MatchingResult:
    triangles: tuple[int, ...]
    size: int
    optimal: bool
    bound_gap: int = 0
    nodes: int = 0


@dataclass(frozen=True)
class CoverResult:
    edges: tuple[Edge, ...]
    size: int
    optimal: bool
    bound_gap: int = 0
    nodes: int = 0


# -- certificate checks ----------------------------------------------------------


def is_matching(ts: TriangleSystem, triangles) -> bool:
    idx = np.asarray(list(triangles), dtype=np.int64)
    if len(idx) == 0:
        return True
    if idx.min() < 0 or idx.max() >= len(ts) or len(np.unique(idx)) != len(idx):
        return False
    used = ts.tri_edges[idx].ravel()
    return len(np.unique(used)) == len(used)


def is_cover(ts: TriangleSystem, edges) -> bool:
    mask = np.zeros(ts.host.m, dtype=bool)
    for e in edges:
        i = ts.host.edge_id(*e)
        if i < 0:
            return False
        mask[i] = True
    return bool(mask[ts.tri_edges].any(axis=1).all()) if len(ts) else True


def is_cover_mask(ts: TriangleSystem, mask: np.ndarray) -> bool:
    return bool(np.asarray(mask)[ts.tri_edges].any(axis=1).all()) if len(ts) else True


def tuza_check(nu: MatchingResult, tau: CoverResult) -> bool:
    """True unless both results are optimal and tau > 2 nu (then warn loudly)."""
    if nu.optimal and tau.optimal and tau.size > 2 * nu.size:
        warnings.warn(TuzaViolation(f"tau={tau.size} > 2*nu={2 * nu.size}"), stacklevel=2)
        return False
    return True


# -- search bookkeeping ------------------------------------------------------------


class _OutOfBudget(Exception):
    pass


class _Counter:
    def __init__(self, budget: Budget):
        self.left = budget.nodes
        self.deadline = None if budget.seconds is None else time.monotonic() + budget.seconds
        self.used = 0

    def tick(self):
        if self.left <= 0:
            raise _OutOfBudget
        if self.deadline is not None and self.used % 64 == 0 and time.monotonic() > self.deadline:
            raise _OutOfBudget
        self.left -= 1
        self.used += 1


@dataclass
class _Piece:
    """One triangle-component with local edge ids ``0..m-1``."""

    tri: list[tuple[int, int, int]]  # local edge ids per triangle
    verts: list[tuple[int, int, int]]
    m: int
    edge_ids: np.ndarray  # local -> global edge id
    tri_ids: np.ndarray  # local -> global triangle index


def _pieces(ts: TriangleSystem, decompose: bool) -> list[_Piece]:
    if not len(ts):
        return []
    if decompose:
        groups = [(c.edge_ids, c.triangles) for c in triangle_components(ts) if not c.trivial]
    else:
        groups = [(np.unique(ts.tri_edges.ravel()), np.arange(len(ts)))]
    out = []
    for eids, tids in groups:
        eids = np.sort(eids)
        tids = np.sort(tids)
        local = np.searchsorted(eids, ts.tri_edges[tids])
        out.append(_Piece([tuple(r) for r in local.tolist()],
                          [tuple(r) for r in ts.triangles[tids].tolist()],
                          len(eids), eids, tids))
    return out


def _edge_masks(piece: _Piece) -> list[int]:
    etri = [0] * piece.m
    for i, t in enumerate(piece.tri):
        for e in t:
            etri[e] |= 1 << i
    return etri


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


# -- greedy starting points ----------------------------------------------------------


def _greedy_cover(piece: _Piece, etri: list[int], uncovered: int | None = None,
                  allowed: int | None = None) -> list[int] | None:
    U = (1 << len(piece.tri)) - 1 if uncovered is None else uncovered
    allowed = (1 << piece.m) - 1 if allowed is None else allowed
    chosen = []
    while U:
        best, best_c = -1, 0
        for e in _bits(allowed):
            c = (etri[e] & U).bit_count()
            if c > best_c:
                best, best_c = e, c
        if best < 0:
            return None
        chosen.append(best)
        U &= ~etri[best]
    return chosen


def _greedy_packing(piece: _Piece, available: int | None = None) -> list[int]:
    A = (1 << len(piece.tri)) - 1 if available is None else available
    used = set()
    chosen = []
    for i in _bits(A):
        t = piece.tri[i]
        if used.isdisjoint(t):
            used.update(t)
            chosen.append(i)
    return chosen


# -- combinatorial engine ------------------------------------------------------------


def _tau_matching_bound(piece: _Piece, counter: _Counter):
    etri = _edge_masks(piece)
    nt = len(piece.tri)
    tri = piece.tri
    nbr_edges = [set() for _ in range(piece.m)]
    for t in tri:
        for e in t:
            nbr_edges[e].update(t)
    best = _greedy_cover(piece, etri)
    state = {"best": list(best)}

    def packing_lb(U, allowed):
        used = 0
        cnt = 0
        for i in _bits(U):
            msk = 0
            for e in tri[i]:
                if allowed >> e & 1:
                    msk |= 1 << e
            if not msk & used:
                used |= msk
                cnt += 1
        return cnt

    root_lb = packing_lb((1 << nt) - 1, (1 << piece.m) - 1)

    def rec(U, allowed, chosen):
        counter.tick()
        chosen = list(chosen)
        changed = True
        while changed:
            changed = False
            for i in _bits(U):
                live = [e for e in tri[i] if allowed >> e & 1]
                if not live:
                    return
                if len(live) == 1:
                    e = live[0]
                    chosen.append(e)
                    U &= ~etri[e]
                    changed = True
                    break
            if changed or not U:
                continue
            # drop edges whose uncovered triangles are a subset of a neighbour's
            for e in _bits(allowed):
                me = etri[e] & U
                if not me:
                    allowed &= ~(1 << e)
                    continue
                ce = me.bit_count()
                for f in nbr_edges[e]:
                    if f == e or not allowed >> f & 1:
                        continue
                    mf = etri[f] & U
                    if me & ~mf == 0 and (mf.bit_count() > ce or f < e):
                        allowed &= ~(1 << e)
                        changed = True
                        break
                if changed:
                    break
        if len(chosen) >= len(state["best"]):
            return
        if not U:
            state["best"] = chosen
            return
        if len(chosen) + packing_lb(U, allowed) >= len(state["best"]):
            return
        pick, pick_c = -1, -1
        for e in _bits(allowed):
            c = (etri[e] & U).bit_count()
            if c > pick_c:
                pick, pick_c = e, c
        rec(U & ~etri[pick], allowed, chosen + [pick])
        rec(U, allowed & ~(1 << pick), chosen)

    try:
        rec((1 << nt) - 1, (1 << piece.m) - 1, [])
        return state["best"], True, 0
    except _OutOfBudget:
        return state["best"], False, len(state["best"]) - root_lb


def _nu_matching_bound(piece: _Piece, counter: _Counter):
    etri = _edge_masks(piece)
    nt = len(piece.tri)
    tri = piece.tri
    clash = []
    for i, t in enumerate(tri):
        msk = 0
        for e in t:
            msk |= etri[e]
        clash.append(msk)
    # local vertex ids of every edge, for the degree bound
    vid: dict[int, int] = {}
    ends = [None] * piece.m
    for t, (a, b, c) in zip(tri, piece.verts):
        for e, (u, v) in zip(t, ((a, b), (a, c), (b, c))):
            ends[e] = (vid.setdefault(u, len(vid)), vid.setdefault(v, len(vid)))

    def upper(A):
        alive = 0
        for i in _bits(A):
            for e in tri[i]:
                alive |= 1 << e
        ub = alive.bit_count() // 3
        if ub <= 1:
            return ub
        deg = [0] * len(vid)
        for e in _bits(alive):
            u, v = ends[e]
            deg[u] += 1
            deg[v] += 1
        ub = min(ub, sum(x // 2 for x in deg) // 3)
        if ub <= 1:
            return ub
        return min(ub, len(_greedy_cover(piece, etri, A)))

    def split(A):
        parts = []
        while A:
            comp = A & -A
            frontier = comp
            while frontier:
                grow = 0
                for i in _bits(frontier):
                    grow |= clash[i]
                frontier = grow & A & ~comp
                comp |= frontier
            parts.append(comp)
            A &= ~comp
        return parts

    incomplete = False

    def solve(A):
        """Maximum matching inside ``A``; exact unless the budget runs out."""
        nonlocal incomplete
        try:
            counter.tick()
        except _OutOfBudget:
            incomplete = True
            return _greedy_packing(piece, A)
        free = []
        for i in _bits(A):
            if clash[i] & A == 1 << i:
                free.append(i)
                A &= ~(1 << i)
        if not A:
            return free
        parts = split(A)
        if len(parts) > 1:
            out = list(free)
            for part in parts:
                out.extend(solve(part))
            return out
        best = _greedy_packing(piece, A)
        ub = upper(A)

        def rec(B, chosen):
            nonlocal best
            counter.tick()
            if len(best) == ub:
                return
            if not B:
                if len(chosen) > len(best):
                    best = list(chosen)
                return
            if len(chosen) + upper(B) <= len(best):
                return
            pick, pick_c = -1, nt + 1
            for i in _bits(B):
                for e in tri[i]:
                    c = (etri[e] & B).bit_count()
                    if c < pick_c:
                        pick, pick_c = e, c
            for i in _bits(etri[pick] & B):
                rec(B & ~clash[i], chosen + [i])
            rec(B & ~etri[pick], chosen)

        try:
            rec(A, [])
        except _OutOfBudget:
            incomplete = True
        return free + best

    full = (1 << nt) - 1
    root_ub = upper(full)
    sol = solve(full)
    if incomplete:
        return sol, False, max(root_ub - len(sol), 0)
    return sol, True, 0


# -- LP engine -----------------------------------------------------------------------


def _highs_model(cost, A, row_lo, row_hi, maximize):
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    lp = highspy.HighsLp()
    nc = A.shape[1]
    lp.num_col_ = nc
    lp.num_row_ = A.shape[0]
    lp.col_cost_ = np.asarray(cost, dtype=float)
    lp.col_lower_ = np.zeros(nc)
    lp.col_upper_ = np.ones(nc)
    lp.row_lower_ = np.asarray(row_lo, dtype=float)
    lp.row_upper_ = np.asarray(row_hi, dtype=float)
    A = csc_matrix(A)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr
    lp.a_matrix_.index_ = A.indices
    lp.a_matrix_.value_ = A.data.astype(float)
    lp.sense_ = highspy.ObjSense.kMaximize if maximize else highspy.ObjSense.kMinimize
    h.passModel(lp)
    return h


class _LPSearch:
    """Depth-first 0/1 branch-and-bound over a warm-started HiGHS LP."""

    def __init__(self, h, ncols, maximize, heuristic, choose, counter):
        import highspy

        self.h = h
        self.ncols = ncols
        self.maximize = maximize
        self.heuristic = heuristic
        self.choose = choose
        self.counter = counter
        self.lo = np.zeros(ncols)
        self.hi = np.ones(ncols)
        self.best = None
        self.best_val = None
        self.root_bound = None
        self._optimal = highspy.HighsModelStatus.kOptimal

    def _better(self, val):
        if self.best_val is None:
            return True
        return val > self.best_val if self.maximize else val < self.best_val

    def _prunes(self, bound):
        if self.best_val is None:
            return False
        return bound <= self.best_val if self.maximize else bound >= self.best_val

    def offer(self, val, sol):
        if sol is not None and self._better(val):
            self.best_val, self.best = val, sol

    def run(self):
        try:
            self._node()
            return True
        except _OutOfBudget:
            return False

    def _node(self):
        self.counter.tick()
        h = self.h
        h.run()
        if h.getModelStatus() != self._optimal:
            return
        obj = h.getInfo().objective_function_value
        bound = math.floor(obj + EPS) if self.maximize else math.ceil(obj - EPS)
        if self.root_bound is None:
            self.root_bound = bound
        if self._prunes(bound):
            return
        x = np.array(h.getSolution().col_value)
        self.offer(*self.heuristic(x, self.lo, self.hi))
        if self.best_val == bound:
            return
        frac = np.flatnonzero((x > EPS) & (x < 1 - EPS))
        if not len(frac):
            return
        j = int(self.choose(x, frac))
        for v in (1.0, 0.0):
            old = (self.lo[j], self.hi[j])
            self.lo[j] = self.hi[j] = v
            h.changeColBounds(j, v, v)
            self._node()
            self.lo[j], self.hi[j] = old
            h.changeColBounds(j, *old)


def _tau_lp(piece: _Piece, counter: _Counter):
    nt, m = len(piece.tri), piece.m
    tri = np.array(piece.tri, dtype=np.int64)
    A = csc_matrix((np.ones(3 * nt), (np.repeat(np.arange(nt), 3), tri.ravel())), shape=(nt, m))
    etri = [[] for _ in range(m)]
    for i, t in enumerate(piece.tri):
        for e in t:
            etri[e].append(i)
    load = np.array([len(x) for x in etri])
    ids = np.arange(m)

    def heuristic(x, lo, hi):
        covered = np.zeros(nt, dtype=bool)
        chosen = [int(e) for e in np.flatnonzero(lo == 1)]
        for e in chosen:
            covered[etri[e]] = True
        for e in np.lexsort((ids, -x)):
            if covered.all():
                break
            if hi[e] == 0 or lo[e] == 1 or covered[etri[e]].all():
                continue
            chosen.append(int(e))
            covered[etri[e]] = True
        if not covered.all():
            return None, None
        cnt = np.zeros(nt, dtype=np.int64)
        for e in chosen:
            cnt[etri[e]] += 1
        final = []
        for e in sorted(chosen, key=lambda e: (x[e], e)):
            if lo[e] == 0 and (cnt[etri[e]] > 1).all():
                cnt[etri[e]] -= 1
            else:
                final.append(e)
        return len(final), sorted(final)

    def choose(x, frac):
        closeness = np.minimum(x[frac], 1 - x[frac])
        return frac[np.lexsort((frac, -load[frac], -closeness))[0]]

    h = _highs_model(np.ones(m), A, np.ones(nt), np.full(nt, np.inf), maximize=False)
    search = _LPSearch(h, m, False, heuristic, choose, counter)
    etri_bits = _edge_masks(piece)
    search.offer(*(lambda c: (len(c), sorted(c)))(_greedy_cover(piece, etri_bits)))
    done = search.run()
    gap = 0 if done else search.best_val - (search.root_bound or 0)
    return search.best, done, max(gap, 0)


def _k4_cliques(piece: _Piece) -> list[list[int]]:
    index = {v: i for i, v in enumerate(piece.verts)}
    adj: dict[int, set[int]] = {}
    for a, b, c in piece.verts:
        for u, v in ((a, b), (a, c), (b, c)):
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
    out = []
    for a, b, c in piece.verts:
        for z in sorted(adj[a] & adj[b] & adj[c]):
            if z > c:
                quad = (a, b, c, z)
                tris = [tuple(sorted(q)) for q in itertools.combinations(quad, 3)]
                if all(t in index for t in tris):
                    out.append([index[t] for t in tris])
    return out


def _nu_lp(piece: _Piece, counter: _Counter):
    nt, m = len(piece.tri), piece.m
    tri = np.array(piece.tri, dtype=np.int64)
    verts = np.array(piece.verts, dtype=np.int64)
    rows = [csc_matrix((np.ones(3 * nt), (tri.ravel(), np.repeat(np.arange(nt), 3))), shape=(m, nt))]
    ub = [np.ones(m)]
    # per-vertex rows: a triangle at v uses two of the edges at v
    vlab, vinv = np.unique(verts.ravel(), return_inverse=True)
    vinv = vinv.reshape(-1, 3)
    edge_verts = np.unique(np.concatenate([
        np.column_stack([verts[:, 0], verts[:, 1]]), np.column_stack([verts[:, 0], verts[:, 2]]),
        np.column_stack([verts[:, 1], verts[:, 2]])]), axis=0)
    deg = np.bincount(np.searchsorted(vlab, edge_verts.ravel()), minlength=len(vlab))
    rows.append(csc_matrix((np.ones(3 * nt), (vinv.ravel(), np.repeat(np.arange(nt), 3))),
                           shape=(len(vlab), nt)))
    ub.append(deg // 2)
    cliques = _k4_cliques(piece)
    if cliques:
        r = np.repeat(np.arange(len(cliques)), 4)
        c = np.array(cliques).ravel()
        rows.append(csc_matrix((np.ones(len(r)), (r, c)), shape=(len(cliques), nt)))
        ub.append(np.ones(len(cliques)))
    rows.append(csc_matrix(np.ones((1, nt))))
    ub.append(np.array([m // 3]))
    A = vstack(rows)
    ub = np.concatenate(ub).astype(float)
    ids = np.arange(nt)

    def heuristic(x, lo, hi):
        used = np.zeros(m, dtype=bool)
        chosen = []
        forced = np.flatnonzero(lo == 1)
        for i in list(forced) + list(np.lexsort((ids, -x))):
            if hi[i] == 0:
                continue
            t = tri[i]
            if not used[t].any():
                used[t] = True
                chosen.append(int(i))
        return len(chosen), sorted(chosen)

    def choose(x, frac):
        closeness = np.minimum(x[frac], 1 - x[frac])
        return frac[np.lexsort((frac, -closeness))[0]]

    h = _highs_model(np.ones(nt), A, np.full(A.shape[0], -np.inf), ub, maximize=True)
    search = _LPSearch(h, nt, True, heuristic, choose, counter)
    g = _greedy_packing(piece)
    search.offer(len(g), g)
    done = search.run()
    gap = 0 if done else (search.root_bound if search.root_bound is not None else m // 3) - search.best_val
    return search.best, done, max(gap, 0)


# -- public solvers --------------------------------------------------------------------


def _small_piece(piece: _Piece):
    """Closed forms for components whose triangles all share one edge."""
    common = set(piece.tri[0])
    for t in piece.tri[1:]:
        common &= set(t)
    if common:
        return min(common)
    return None


def nu_exact(ts: TriangleSystem, budget: Budget | None = None, bound: str = "lp",
             decompose: bool = True) -> MatchingResult:
    """Maximum number of pairwise edge-disjoint triangles."""
    counter = _Counter(budget or Budget())
    chosen, optimal, gap = [], True, 0
    for piece in _pieces(ts, decompose):
        if _small_piece(piece) is not None:
            counter.used += 1
            chosen.append(int(piece.tri_ids[0]))
            continue
        if bound == "lp":
            sol, done, g = _nu_lp(piece, counter)
        elif bound == "matching":
            sol, done, g = _nu_matching_bound(piece, counter)
        else:
            raise ValueError(f"unknown bound {bound!r}")
        chosen.extend(int(piece.tri_ids[i]) for i in sol)
        optimal &= done
        gap += g
    chosen.sort()
    if not is_matching(ts, chosen):
        raise AssertionError("solver produced an invalid matching")
    return MatchingResult(tuple(chosen), len(chosen), optimal, gap, counter.used)


def tau_exact(ts: TriangleSystem, budget: Budget | None = None, bound: str = "lp",
              decompose: bool = True) -> CoverResult:
    """Minimum number of edges meeting every triangle."""
    counter = _Counter(budget or Budget())
    chosen, optimal, gap = [], True, 0
    for piece in _pieces(ts, decompose):
        e = _small_piece(piece)
        if e is not None:
            counter.used += 1
            chosen.append(int(piece.edge_ids[e]))
            continue
        if bound == "lp":
            sol, done, g = _tau_lp(piece, counter)
        elif bound == "matching":
            sol, done, g = _tau_matching_bound(piece, counter)
        else:
            raise ValueError(f"unknown bound {bound!r}")
        chosen.extend(int(piece.edge_ids[i]) for i in sol)
        optimal &= done
        gap += g
    edges = tuple(sorted(ts.host.edge(i) for i in chosen))
    if not is_cover(ts, edges):
        raise AssertionError("solver produced an invalid cover")
    return CoverResult(edges, len(edges), optimal, gap, counter.used)


def tree_nu_tau(tree: TriangleTree) -> tuple[MatchingResult, CoverResult]:
    """Equal-size matching and cover of a triangle-tree, built bottom up.

    Repeatedly take a deepest triangle ``A`` (ties by insertion order) with
    base ``e`` and parent ``B``: match ``A``, cover ``e``, delete ``e`` with
    every triangle on it, and settle the star hanging off ``B``'s other
    child edge (match one of its triangles, cover that edge).  What is left
    is the root star.
    """
    tree.validate()
    tris = tree.triangles
    children = tree.children
    alive = set(range(len(tris)))
    matching: list[int] = []
    cover: list[Edge] = []
    for i in sorted(alive, key=lambda j: (-tris[j].depth, j)):
        if i not in alive:
            continue
        a = tris[i]
        if a.depth < 2:
            break
        e = a.base
        parent = tris[a.parent]
        k = next(f for f in parent.children_edges if f != e)
        matching.append(i)
        cover.append(e)
        alive.difference_update(children[e])
        alive.discard(a.parent)
        star = [j for j in children[k] if j in alive]
        if star:
            matching.append(star[0])
            cover.append(k)
            alive.difference_update(star)
    rest = sorted(alive)
    if rest:
        matching.append(rest[0])
        cover.append(tree.root)
    matching.sort()
    cover = sorted(canon(*c) for c in cover)
    # certificates, checked against the tree itself
    used = [f for j in matching for f in (tris[j].base, *tris[j].children_edges)]
    if len(set(used)) != len(used):
        raise AssertionError("tree matching is not edge-disjoint")
    cset = set(cover)
    for t in tris:
        if not cset.intersection((t.base, *t.children_edges)):
            raise AssertionError("tree cover misses a triangle")
    if len(matching) != len(cover):
        raise AssertionError("tree matching and cover differ in size")
    k = len(matching)
    return (MatchingResult(tuple(matching), k, True, 0, 0),
            CoverResult(tuple(cover), k, True, 0, 0))
