"""Run experiment specs and write their reports.

    python scripts/run_experiments.py                  # every spec in scripts/specs
    python scripts/run_experiments.py greedy_sweep     # just one
"""

import argparse
import json
from pathlib import Path

from tuzalab.harness import ExperimentSpec, emit_report, run_experiment

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", help="spec file stems (default: all)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    files = sorted((HERE / "specs").glob("*.json"))
    if a.names:
        files = [f for f in files if f.stem in a.names]
    for f in files:
        spec = ExperimentSpec.from_json(f)
        rec = run_experiment(spec, threads=a.threads)
        paths = emit_report([rec], Path(a.out) / f.stem)
        print(f"{f.stem:18s} passed={rec.passed} {rec.elapsed:7.1f}s -> {paths['rows'].parent}")
        for agg in rec.aggregates:
            means = {k: round(v["mean"], 5) for k, v in agg["stats"].items() if v["mean"] is not None}
            print("   ", json.dumps(agg["params"]), means)


if __name__ == "__main__":
    main()
