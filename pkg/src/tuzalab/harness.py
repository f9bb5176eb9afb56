"""Experiment specs, trial runners and report writing.

A spec names a kind, a parameter grid and a master seed.  The grid is
expanded in a fixed key order into cells; trial ``t`` of cell ``c`` uses
``derive_seed(seed, c, t)``, so any row can be replayed on its own and rows
come out in (cell, trial) order however the trials were scheduled.

Spec files are JSON::

    {"kind": "greedy-sweep",
     "grid": {"n": [3000], "d": [2.0]},
     "trials": 20, "seed": 1,
     "options": {},
     "tolerances": {"matching_frac": {"ref": "xi", "abs": 0.01}}}

``grid`` takes ``n`` plus exactly one of ``d`` / ``p`` (``gamma`` for the
coupling diagnostic).  Tolerances are checked against per-cell means;
``ref`` is a number or one of the constant names in ``REFERENCES``, and
``abs``, ``min``, ``max`` or ``range`` give the allowed region.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analytics
from .branching import GWParams, compare_local_law, estimate_root_survival, survival_probability
from .exact import Budget, is_cover_mask, nu_exact, tau_exact, tuza_check
from .graph import GnpParams, count_isolated_triangles, enumerate_triangles, sample_gnp
from .randomized import (WeightAssignment, covered_edges, fractional_matching, greedy_matching,
                         partition_cover)
from .rng import derive_seed

KINDS = ("tuza-audit", "greedy-sweep", "cover-sweep", "gw-survival", "small-d-gap",
         "fractional-sweep", "coupling-diagnostic")
GRID_ORDER = ("n", "d", "p", "gamma")

REFERENCES = {
    "xi": lambda d: analytics.xi(d),
    "psi": lambda d: analytics.psi(d),
    "survival": survival_probability,
    "cover": lambda d: 1 - survival_probability(d),
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    grid: dict
    trials: int = 1
    seed: int = 0
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if not self.grid or any(len(v) == 0 for v in self.grid.values()):
            raise ValueError("grid must be nonempty")
        if "d" in self.grid and "p" in self.grid:
            raise ValueError("give d or p, not both")
        bad = set(self.grid) - set(GRID_ORDER)
        if bad:
            raise ValueError(f"unknown grid keys {sorted(bad)}")
        if self.kind != "gw-survival" and "n" not in self.grid:
            raise ValueError("grid needs n")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        keys = {"kind", "grid", "trials", "seed", "options", "tolerances", "out"}
        extra = set(data) - keys
        if extra:
            raise ValueError(f"unknown spec fields {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def cells(self) -> list[dict]:
        keys = [k for k in GRID_ORDER if k in self.grid]
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.grid[k] for k in keys))]


@dataclass
class ExperimentRecord:
    spec: ExperimentSpec
    columns: list[str]
    rows: list[dict]
    aggregates: list[dict]
    checks: list[dict]
    elapsed: float = 0.0

    @property
    def passed(self) -> bool | None:
        if not self.checks:
            return None
        return all(c["passed"] for c in self.checks)


# -- per-trial work ----------------------------------------------------------------


def _gnp(cell: dict, seed: int) -> GnpParams:
    if "p" in cell:
        return GnpParams(int(cell["n"]), float(cell["p"]), seed)
    return GnpParams.from_d(int(cell["n"]), float(cell["d"]), seed)


def _budget(opts: dict) -> Budget:
    return Budget(int(opts.get("budget_nodes", 1_000_000)), opts.get("budget_seconds"))


def _head(gp: GnpParams, seed: int) -> dict:
    return {"n": gp.n, "p": gp.p, "d": gp.d, "seed": seed}


def trial_tuza(cell, seed, opts):
    gp = _gnp(cell, seed)
    ts = enumerate_triangles(sample_gnp(gp))
    bound = opts.get("bound", "lp")
    nu = nu_exact(ts, _budget(opts), bound=bound)
    tau = tau_exact(ts, _budget(opts), bound=bound)
    tuza_check(nu, tau)
    ratio = tau.size / nu.size if nu.size else float("nan")
    return {**_head(gp, seed), "nu": nu.size, "tau": tau.size, "ratio": ratio,
            "optimal": int(nu.optimal and tau.optimal)}


def trial_small_gap(cell, seed, opts):
    gp = _gnp(cell, seed)
    g = sample_gnp(gp)
    ts = enumerate_triangles(g)
    nu = nu_exact(ts, _budget(opts), bound=opts.get("bound", "lp"))
    tau = tau_exact(ts, _budget(opts), bound=opts.get("bound", "lp"))
    iso = count_isolated_triangles(ts)
    return {**_head(gp, seed), "edges": g.m, "triangles": len(ts), "nonisolated": len(ts) - iso,
            "nu": nu.size, "tau": tau.size, "gap_frac": (tau.size - nu.size) / gp.m,
            "optimal": int(nu.optimal and tau.optimal)}


def trial_greedy(cell, seed, opts):
    gp = _gnp(cell, seed)
    g = sample_gnp(gp)
    ts = enumerate_triangles(g)
    M = greedy_matching(ts, WeightAssignment.from_seed(ts, derive_seed(seed, 1)))
    covered = int(covered_edges(ts, M).sum())
    return {**_head(gp, seed), "edges": g.m, "matching": M.size, "matching_frac": M.size / gp.m,
            "covered_frac": covered / g.m if g.m else 0.0}


def trial_cover(cell, seed, opts):
    gp = _gnp(cell, seed)
    g = sample_gnp(gp)
    ts = enumerate_triangles(g)
    res = partition_cover(ts, seed=derive_seed(seed, 1))
    sz = res.sizes
    return {**_head(gp, seed), "edges": g.m, "W0": sz["W0"], "W1": sz["W1"], "W2": sz["W2"],
            "W": sz["W"], "cover_frac": sz["W"] / gp.m, "valid": int(is_cover_mask(ts, res.W))}


def trial_fractional(cell, seed, opts):
    gp = _gnp(cell, seed)
    ts = enumerate_triangles(sample_gnp(gp))
    fm = fractional_matching(ts, gp.d, opts.get("sigma"))
    return {**_head(gp, seed), "triangles": len(ts), "D": fm.D, "sigma": fm.sigma,
            "total": fm.total, "ratio": fm.total / (gp.m / 3), "alpha": fm.alpha,
            "heavy_edges": fm.heavy_edges, "heavy_frac": fm.heavy_fraction}


def trial_gw(cell, seed, opts):
    d = float(cell["d"])
    params = GWParams(d, int(opts.get("depth_cap", 40)), int(opts.get("node_cap", 10**6)), seed)
    est = estimate_root_survival(params, int(opts.get("samples", 100_000)),
                                 method=opts.get("method", "lazy"))
    target = survival_probability(d)
    return {"d": d, "seed": seed, "samples": est.trials, "survivals": est.survivals,
            "point": est.point, "ci_low": est.ci95[0], "ci_high": est.ci95[1],
            "target": target, "contains": int(est.contains(target)),
            "truncation_rate": est.truncation_rate}


def trial_coupling(cell, seed, opts):
    gp = _gnp(cell, derive_seed(seed, 0))
    gamma = int(cell.get("gamma", 2))
    rep = compare_local_law(gp, GWParams(gp.d, seed=derive_seed(seed, 1)), gamma,
                            int(opts.get("samples", 10_000)))
    return {"n": gp.n, "p": gp.p, "d": gp.d, "gamma": gamma, "seed": seed,
            "tv": rep.tv_triangle_count, "mean_graph": rep.mean_count_graph,
            "mean_gw": rep.mean_count_gw, "tree_rate": rep.tree_rate_graph}


TRIALS = {
    "tuza-audit": trial_tuza,
    "small-d-gap": trial_small_gap,
    "greedy-sweep": trial_greedy,
    "cover-sweep": trial_cover,
    "fractional-sweep": trial_fractional,
    "gw-survival": trial_gw,
    "coupling-diagnostic": trial_coupling,
}


def _run_one(args):
    kind, cell, seed, opts = args
    return TRIALS[kind](cell, seed, opts)


# -- aggregation --------------------------------------------------------------------


def _stats(values: list[float]) -> dict:
    x = np.array([v for v in values if not (isinstance(v, float) and math.isnan(v))], dtype=float)
    if len(x) == 0:
        return {"count": 0, "mean": None, "sd": None, "ci95": None}
    sd = float(x.std(ddof=1)) if len(x) > 1 else 0.0
    half = 1.96 * sd / math.sqrt(len(x))
    mean = float(x.mean())
    return {"count": int(len(x)), "mean": mean, "sd": sd, "ci95": [mean - half, mean + half]}


def _reference(ref, d):
    if isinstance(ref, (int, float)):
        return float(ref)
    return REFERENCES[ref](d)


def _check(stat: str, rule: dict, agg: dict, d):
    mean = agg["stats"].get(stat, {}).get("mean")
    out = {"cell": agg["cell"], "stat": stat, "mean": mean, "rule": rule}
    if mean is None:
        return {**out, "passed": False}
    ok = True
    if "ref" in rule:
        ref = _reference(rule["ref"], d)
        out["reference"] = ref
        if "abs" in rule:
            ok &= abs(mean - ref) <= rule["abs"]
    if "min" in rule:
        ok &= mean >= rule["min"]
    if "max" in rule:
        ok &= mean <= rule["max"]
    if "range" in rule:
        ok &= rule["range"][0] <= mean <= rule["range"][1]
    return {**out, "passed": bool(ok)}


def _skip_row(kind: str, row: dict) -> bool:
    # instances whose search ran out of budget stay in rows.csv but not in statistics
    return kind in ("tuza-audit", "small-d-gap") and not row["optimal"]


def _aggregate(spec: ExperimentSpec, columns, rows_by_cell):
    aggregates, checks = [], []
    for c, (cell, rows) in enumerate(rows_by_cell):
        used = [r for r in rows if not _skip_row(spec.kind, r)]
        stats = {k: _stats([r[k] for r in used]) for k in columns
                 if k not in ("seed", "n", "p", "d", "gamma") and all(isinstance(r[k], (int, float)) for r in used)}
        agg = {"cell": c, "params": cell, "trials": len(rows), "used": len(used), "stats": stats}
        if spec.kind == "tuza-audit":
            agg["violations"] = sum(1 for r in used if r["tau"] > 2 * r["nu"])
            agg["unsolved"] = len(rows) - len(used)
        d = None
        if rows and "d" in rows[0]:
            d = rows[0]["d"]
            cst = analytics.eval_constants(d)
            agg["constants"] = asdict(cst)
        aggregates.append(agg)
        for stat, rule in spec.tolerances.items():
            if stat == "violations":
                ok = agg.get("violations", 0) <= rule.get("max", 0)
                checks.append({"cell": c, "stat": stat, "value": agg.get("violations"),
                               "rule": rule, "passed": bool(ok)})
            else:
                checks.append(_check(stat, rule, agg, d))
    return aggregates, checks


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentRecord:
    t0 = time.perf_counter()
    cells = spec.cells()
    jobs = [(spec.kind, cell, derive_seed(spec.seed, c, t), spec.options)
            for c, cell in enumerate(cells) for t in range(spec.trials)]
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            rows = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        rows = [_run_one(j) for j in jobs]
    for i, r in enumerate(rows):
        r["cell"] = i // spec.trials
        r["trial"] = i % spec.trials
    columns = list(rows[0]) if rows else []
    by_cell = [(cell, rows[c * spec.trials:(c + 1) * spec.trials]) for c, cell in enumerate(cells)]
    aggregates, checks = _aggregate(spec, [k for k in columns if k not in ("cell", "trial")], by_cell)
    return ExperimentRecord(spec, columns, rows, aggregates, checks, time.perf_counter() - t0)


def run_tuza_audit(spec: ExperimentSpec, threads: int = 1) -> ExperimentRecord:
    return run_experiment(_kind(spec, "tuza-audit"), threads)


def run_small_d_gap(spec: ExperimentSpec, threads: int = 1) -> ExperimentRecord:
    spec = _kind(spec, "small-d-gap")
    if "d" in spec.grid and max(spec.grid["d"]) > 0.5:
        raise ValueError("small-d-gap expects d <= 1/2")
    return run_experiment(spec, threads)


def run_greedy_sweep(spec: ExperimentSpec, threads: int = 1) -> ExperimentRecord:
    return run_experiment(_kind(spec, "greedy-sweep"), threads)


def run_cover_sweep(spec: ExperimentSpec, threads: int = 1) -> ExperimentRecord:
    return run_experiment(_kind(spec, "cover-sweep"), threads)


def run_fractional_sweep(spec: ExperimentSpec, threads: int = 1) -> ExperimentRecord:
    return run_experiment(_kind(spec, "fractional-sweep"), threads)


def _kind(spec: ExperimentSpec, kind: str) -> ExperimentSpec:
    if spec.kind != kind:
        raise ValueError(f"expected a {kind} spec, got {spec.kind}")
    return spec


# -- output ---------------------------------------------------------------------------

EMPTY_COLUMNS = ["cell", "trial", "seed"]
TUZA_COLUMNS = ["n", "p", "d", "seed", "nu", "tau", "ratio", "optimal"]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def row_columns(record: ExperimentRecord) -> list[str]:
    if record.spec.kind == "tuza-audit":
        return TUZA_COLUMNS
    return ["cell", "trial"] + [c for c in record.columns if c not in ("cell", "trial")]


def write_constants(path, ds) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "xi", "psi", "survival", "greedy_cover_fraction", "gap"])
        for d in ds:
            c = analytics.eval_constants(float(d))
            w.writerow([repr(float(d)), repr(c.xi), repr(c.psi), repr(c.survival),
                        repr(c.greedy_cover_fraction), repr(2 * c.xi - c.psi)])


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def emit_report(records: list[ExperimentRecord], out) -> dict[str, Path]:
    """Write ``rows.csv``, ``summary.json`` and ``constants.csv`` under ``out``.

    Several records share one directory: their rows are written as
    ``rows.csv`` for the first and ``rows-<i>.csv`` for the rest.
    """
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {"rows": out / "rows.csv", "summary": out / "summary.json",
             "constants": out / "constants.csv"}
    if not records:
        write_rows(paths["rows"], EMPTY_COLUMNS, [])
    for i, rec in enumerate(records):
        target = paths["rows"] if i == 0 else out / f"rows-{i}.csv"
        write_rows(target, row_columns(rec), rec.rows)
    ds = sorted({a["constants"]["d"] for r in records for a in r.aggregates if "constants" in a})
    if not ds:
        ds = [x / 4 for x in range(41)]
    write_constants(paths["constants"], ds)
    summary = [{"spec": r.spec.to_dict(), "aggregates": r.aggregates, "checks": r.checks,
                "passed": r.passed, "elapsed": round(r.elapsed, 3)} for r in records]
    try:
        paths["summary"].write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {paths['summary']}: {exc}") from exc
    return paths
