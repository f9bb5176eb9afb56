"""Monte Carlo root survival in T^d next to (2d + 1)^{-1/2}."""

import sys

from tuzalab.branching import GWParams, estimate_root_survival, survival_probability

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
for d in (0.25, 0.5, 1, 2, 4, 8):
    e = estimate_root_survival(GWParams(d, seed=7), trials)
    t = survival_probability(d)
    print(f"d={d:<5} est={e.point:.4f} ci=({e.ci95[0]:.4f}, {e.ci95[1]:.4f}) target={t:.4f}"
          f" {'in' if e.contains(t) else 'OUT'}")
