"""Total variation between Bin(n + c, p) and Po(np) against |c| p + 5 p."""

from tuzalab.branching import tv_bin_poisson

n, p = 10**4, 1e-3
print(f"{'c':>5} {'tv':>12} {'bound':>8}")
for c in (-100, -10, 0, 10, 100, 1000):
    tv = tv_bin_poisson(n, c, p)
    print(f"{c:5d} {tv:12.6g} {abs(c) * p + 5 * p:8.4f}")
