"""Print the interval cases of the psi < 2 xi check and write the 2 xi - psi curve."""

import argparse

import numpy as np

from tuzalab.analytics import verify_lemma_c
from tuzalab.harness import write_constants


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", default="gap_curve.csv")
    ap.add_argument("--interval-mode", action="store_true")
    a = ap.parse_args()
    rep = verify_lemma_c(1e-3, a.interval_mode)
    print(f"verified={rep.verified} min_margin={rep.min_margin:.6f}")
    for c in rep.cases:
        lo, hi = c.interval
        ab = "" if c.A is None else f"A={c.A:+.5f} B={c.B:.5f}"
        vals = " ".join(f"{v:.5f}" for v in c.endpoint_values)
        print(f"[{lo:>4}, {hi:>4}] {c.form:12s} {ab:24s} ends={vals} margin={c.margin:.5f}")
    print(f"min of 2xi - psi on [1/2, 10]: {rep.sweep_min:.6f} at d={rep.sweep_argmin:.3f}")
    write_constants(a.csv, np.linspace(0, 10, 401))


if __name__ == "__main__":
    main()
