"""Command line entry point: ``tuzalab <command> ...``.

Results go to stdout as JSON unless an output path is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analytics, harness
from .branching import GWParams, estimate_root_survival, sample_gw_tree, survival_probability
from .exact import Budget, nu_exact, tau_exact, tree_nu_tau
from .graph import Graph, GnpParams, enumerate_triangles, sample_gnp
from .randomized import (WeightAssignment, covered_edges, fractional_matching, greedy_matching,
                         partition_cover)
from .rng import UniformStream, derive_seed
from .structure import TriangleTree, random_tree


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, default=harness._json_default)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _graph_args(p):
    p.add_argument("--graph", help="edge-list file (first line 'n m', then 'u v' per edge)")
    p.add_argument("--n", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--p", type=float)
    g.add_argument("--d", type=float)
    p.add_argument("--seed", type=int, default=0)


def _load_graph(a) -> tuple[Graph, GnpParams | None]:
    if a.graph:
        return Graph.read_edgelist(a.graph), None
    if a.n is None or (a.p is None and a.d is None):
        raise SystemExit("give --graph, or --n with --p or --d")
    gp = GnpParams(a.n, a.p, a.seed) if a.p is not None else GnpParams.from_d(a.n, a.d, a.seed)
    return sample_gnp(gp), gp


def _budget_args(p):
    p.add_argument("--budget-nodes", type=int, default=1_000_000)
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--bound", choices=["lp", "matching"], default="lp")


def cmd_nu_tau(a):
    g, _ = _load_graph(a)
    ts = enumerate_triangles(g)
    budget = Budget(a.budget_nodes, a.budget_seconds)
    if a.cmd == "nu":
        r = nu_exact(ts, budget, bound=a.bound)
        out = {"nu": r.size, "optimal": r.optimal, "bound_gap": r.bound_gap, "nodes": r.nodes,
               "triangles": [list(map(int, ts.triangles[i])) for i in r.triangles]}
    else:
        r = tau_exact(ts, budget, bound=a.bound)
        out = {"tau": r.size, "optimal": r.optimal, "bound_gap": r.bound_gap, "nodes": r.nodes,
               "edges": [list(e) for e in r.edges]}
    _dump({"n": g.n, "m": g.m, "num_triangles": len(ts), **out}, a.out)


def cmd_tree_solve(a):
    if a.tree:
        tree = TriangleTree.from_dict(json.loads(Path(a.tree).read_text()))
    else:
        tree = random_tree(a.random, a.seed)
    M, C = tree_nu_tau(tree)
    _dump({"triangles": tree.num_triangles, "nu": M.size, "tau": C.size,
           "matching": [list(tree.triangles[i].vertices) for i in M.triangles],
           "cover": [list(e) for e in C.edges]}, a.out)


def cmd_greedy(a):
    rows = []
    for t in range(a.trials):
        seed = a.seed if a.trials == 1 else derive_seed(a.seed, 0, t)
        a2 = argparse.Namespace(**{**vars(a), "seed": seed})
        g, gp = _load_graph(a2)
        ts = enumerate_triangles(g)
        M = greedy_matching(ts, WeightAssignment.from_seed(ts, derive_seed(seed, 1)))
        m = gp.m if gp else g.m
        rows.append({"seed": seed, "edges": g.m, "matching": M.size, "matching_frac": M.size / m,
                     "covered_frac": float(covered_edges(ts, M).sum() / g.m) if g.m else 0.0})
    _dump({"trials": rows, "mean_matching_frac": float(np.mean([r["matching_frac"] for r in rows]))},
          a.out)


def cmd_cover(a):
    rows = []
    for t in range(a.trials):
        seed = a.seed if a.trials == 1 else derive_seed(a.seed, 0, t)
        a2 = argparse.Namespace(**{**vars(a), "seed": seed})
        g, gp = _load_graph(a2)
        ts = enumerate_triangles(g)
        res = partition_cover(ts, seed=derive_seed(seed, 1))
        m = gp.m if gp else g.m
        rows.append({"seed": seed, "edges": g.m, **res.sizes, "cover_frac": res.size / m})
    _dump({"trials": rows, "mean_cover_frac": float(np.mean([r["cover_frac"] for r in rows]))}, a.out)


def cmd_fractional(a):
    g, gp = _load_graph(a)
    ts = enumerate_triangles(g)
    d = gp.d if gp else a.density
    if d is None:
        raise SystemExit("give --density for a graph file")
    fm = fractional_matching(ts, d, a.sigma)
    m = gp.m if gp else g.m
    _dump({"D": fm.D, "sigma": fm.sigma, "total": fm.total, "ratio": fm.total / (m / 3),
           "alpha": fm.alpha, "heavy_edges": fm.heavy_edges, "heavy_fraction": fm.heavy_fraction},
          a.out)


def cmd_gw(a):
    cap = min(a.depth_cap, a.gamma) if a.gamma else a.depth_cap
    params = GWParams(a.d, cap, a.node_cap, a.seed)
    stream = UniformStream(a.seed)
    prof = np.zeros(cap + 1)
    lines = ["trial,triangles,depth,truncated"]
    cut = 0
    for t in range(a.trials):
        out = sample_gw_tree(params, stream)
        prof += out.depth_profile
        cut += out.truncated
        lines.append(f"{t},{out.tree.num_triangles},{out.tree.depth},{int(out.truncated)}")
    if a.csv:
        Path(a.csv).write_text("\n".join(lines) + "\n")
    summary = {"d": a.d, "trials": a.trials, "depth_cap": cap, "truncated": cut,
               "mean_profile": (prof[1:] / a.trials).tolist()}
    if a.survival:
        est = estimate_root_survival(GWParams(a.d, a.depth_cap, a.node_cap, derive_seed(a.seed, 1)),
                                     a.trials)
        summary["survival"] = {**asdict(est), "target": survival_probability(a.d)}
    _dump(summary, a.out)


def cmd_constants(a):
    c = analytics.eval_constants(a.d)
    _dump({**asdict(c), "psi_series": analytics.rhs_partition_limit(a.d)}, a.out)


def cmd_verify(a):
    r = analytics.verify_lemma_c(a.grid_step, a.interval_mode)
    if a.table:
        n = int(round(10 / a.grid_step))
        harness.write_constants(a.table, [10 * i / n for i in range(n + 1)])
    _dump(asdict(r), a.out)
    return 0 if r.verified else 1


def cmd_experiment(a):
    data = json.loads(Path(a.spec).read_text())
    if a.seed is not None:
        data["seed"] = a.seed
    spec = harness.ExperimentSpec.from_dict(data)
    out = a.out or spec.out
    if not out:
        raise SystemExit("give --out or an 'out' field in the spec")
    rec = harness.run_experiment(spec, threads=a.threads)
    paths = harness.emit_report([rec], out)
    print(json.dumps({"passed": rec.passed, "elapsed": round(rec.elapsed, 2),
                      **{k: str(v) for k, v in paths.items()}}))
    return 0 if rec.passed in (None, True) else 1


def cmd_sample(a):
    g, _ = _load_graph(a)
    if a.out:
        g.write_edgelist(a.out)
    else:
        sys.stdout.write(g.to_edgelist())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tuzalab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    for name in ("nu", "tau"):
        p = sub.add_parser(name, help=f"exact {name} of a graph")
        _graph_args(p)
        _budget_args(p)
        p.add_argument("--out")
        p.set_defaults(func=cmd_nu_tau)

    p = sub.add_parser("tree-solve", help="equal matching and cover of a triangle-tree")
    p.add_argument("--tree", help="tree JSON file")
    p.add_argument("--random", type=int, default=10, help="size of a random tree if no file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tree_solve)

    for name, fn in (("greedy", cmd_greedy), ("cover", cmd_cover)):
        p = sub.add_parser(name)
        _graph_args(p)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--out")
        p.set_defaults(func=fn)

    p = sub.add_parser("fractional")
    _graph_args(p)
    p.add_argument("--sigma", type=float)
    p.add_argument("--density", type=float, help="d for a graph read from file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fractional)

    p = sub.add_parser("gw", help="sample Poisson triangle-trees")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--gamma", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--depth-cap", type=int, default=40)
    p.add_argument("--node-cap", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--survival", action="store_true", help="also estimate root survival in T^d")
    p.add_argument("--csv", help="per-trial CSV path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gw)

    p = sub.add_parser("constants")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("verify-lemma-c", help="finite check that psi < 2 xi on [1/2, oo)")
    p.add_argument("--interval-mode", action="store_true")
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.add_argument("--table", help="write a (d, xi, psi, ...) CSV over [0, 10]")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sample", help="sample G(n, p) as an edge list")
    _graph_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    return a.func(a) or 0


if __name__ == "__main__":
    sys.exit(main())
