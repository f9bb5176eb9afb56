"""Closed-form constants and a finite check that psi(d) < 2 xi(d) for d >= 1/2.

The check rewrites ``psi < 2 xi`` as ``f - g h < 1`` with

    f(d) = 4 (2d + 1)^{-1/2},  g(d) = 3 e^{-d/2},  h(d) = exp(-(d/2) e^{-d}),

using ``1 - (f - g h) = 6 (2 xi - psi)``.  On each interval, f is replaced by
its chord (f convex), g by its tangent at the right end (g convex) and h by
its minimum over the interval, which leaves a linear function ``A d + B``
that only needs checking at the two endpoints.  For d >= 8 monotonicity of
xi and ``xi(8) > 1/4 > psi / 2`` suffice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate, stats


@dataclass(frozen=True)
class AsymptoticConstants:
    d: float
    xi: float
    psi: float
    survival: float
    greedy_cover_fraction: float


def xi(d: float) -> float:
    return (1 - (2 * d + 1) ** -0.5) / 3


def psi(d: float) -> float:
    return 0.5 * -math.expm1(-(d / 2) * (1 + math.exp(-d)))


def eval_constants(d: float) -> AsymptoticConstants:
    if d < 0:
        raise ValueError("d must be non-negative")
    s = (2 * d + 1) ** -0.5
    return AsymptoticConstants(d, xi(d), psi(d), s, 1 - s)


def poisson_pmf(d: float, k: int) -> float:
    return math.exp(-d + k * math.log(d) - math.lgamma(k + 1)) if d > 0 else float(k == 0)


def rhs_partition_limit(d: float, tol: float = 1e-10) -> float:
    """psi(d) assembled term by term from the W0, W1 and W2 limits.

    ``1/2 - e^{-d/2}/2 + sum_{k>=1} p_k 2^{-k-1} (1 - (1 - e^{-d})^k)``, checked
    against the closed form.
    """
    if d < 0:
        raise ValueError("d must be non-negative")
    alpha = math.exp(-d)
    terms = []
    k = 1
    while True:
        pk = poisson_pmf(d, k)
        terms.append(pk * 2.0 ** (-k - 1) * -math.expm1(k * math.log1p(-alpha)) if alpha < 1 else 0.0)
        if k > d and pk < 1e-20:
            break
        k += 1
    series = math.fsum([0.5, -math.exp(-d / 2) / 2] + terms)
    closed = psi(d)
    if abs(series - closed) > tol:
        raise AssertionError(f"series {series!r} and closed form {closed!r} disagree at d={d}")
    return closed


# -- the finite verification ---------------------------------------------------------


def f_(d):
    return 4 * (2 * d + 1) ** -0.5


def g_(d):
    return 3 * math.exp(-d / 2)


def h_(d):
    return math.exp(-(d / 2) * math.exp(-d))


def lhs(d):
    """``f - g h``, below 1 exactly when psi(d) < 2 xi(d)."""
    return f_(d) - g_(d) * h_(d)


@dataclass(frozen=True)
class LemmaCase:
    interval: tuple[float, float]
    form: str
    A: float | None
    B: float | None
    endpoint_values: tuple[float, ...]
    margin: float
    dominates: bool = True
    ok: bool = True


@dataclass(frozen=True)
class LemmaCReport:
    cases: list[LemmaCase]
    verified: bool
    min_margin: float
    sweep_min: float
    sweep_argmin: float
    extra: dict = field(default_factory=dict)

    def case(self, lo: float, hi: float) -> LemmaCase:
        for c in self.cases:
            if c.interval == (lo, hi):
                return c
        raise KeyError((lo, hi))


def _linear_case(lo, hi, h_at, ops):
    """Coefficients of ``f1(d) - g1(d) h(h_at)`` on [lo, hi].

    ``ops`` supplies sqrt/exp so the same code runs in floats or intervals.
    """
    sqrt, exp = ops
    f_lo = 4 / sqrt(2 * lo + 1)
    f_hi = 4 / sqrt(2 * hi + 1)
    fa = (f_hi - f_lo) / (hi - lo)
    fb = f_lo - fa * lo
    g_hi = 3 * exp(-hi / 2)
    ga = -g_hi / 2  # g'(d) = -g(d)/2
    gb = g_hi - ga * hi
    hk = exp(-(h_at / 2) * exp(-h_at))
    return fa - ga * hk, fb - gb * hk


def verify_lemma_c(grid_step: float = 1e-3, interval_mode: bool = False) -> LemmaCReport:
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    cases = []
    # d >= 8: xi increasing and xi(8) > 1/4 while psi < 1/2
    x8 = xi(8.0)
    cases.append(LemmaCase((8.0, math.inf), "xi-monotone", None, None, (x8,),
                           6 * (2 * x8 - 0.5), True, x8 > 0.25))
    pieces = [(0.5, 1.0, 1.0)] + [(float(k), float(k + 1), float(k)) for k in range(1, 8)]
    for lo, hi, h_at in pieces:
        A, B = _linear_case(lo, hi, h_at, (math.sqrt, math.exp))
        vals = (A * lo + B, A * hi + B)
        if interval_mode:
            iv = mpmath.iv
            Ai, Bi = _linear_case(iv.mpf(lo), iv.mpf(hi), iv.mpf(h_at), (iv.sqrt, iv.exp))
            top = max(float((Ai * lo + Bi).b), float((Ai * hi + Bi).b))
        else:
            top = max(vals)
        # the replacement must bound f - g h from above on the whole interval
        ds = np.linspace(lo, hi, max(int(round((hi - lo) / grid_step)), 1) + 1)
        f1 = np.array([f_(lo) + (f_(hi) - f_(lo)) * (d - lo) / (hi - lo) for d in ds])
        g1 = np.array([g_(hi) * (1 - (d - hi) / 2) for d in ds])
        fv = np.array([f_(d) for d in ds])
        gv = np.array([g_(d) for d in ds])
        hv = np.array([h_(d) for d in ds])
        tol = 1e-12
        dom = bool((f1 >= fv - tol).all() and (g1 <= gv + tol).all() and (g1 >= 0).all()
                   and (hv >= h_(h_at) - tol).all())
        form = "case2" if lo == 0.5 else "case1"
        cases.append(LemmaCase((lo, hi), form, A, B, vals, float(1 - top), dom, bool(top < 1 and dom)))
    ds = np.linspace(0.5, 10, int(round(9.5 / grid_step)) + 1)
    sweep = np.array([2 * xi(d) - psi(d) for d in ds])
    i = int(np.argmin(sweep))
    verified = bool(all(c.ok for c in cases) and sweep.min() > 0)
    return LemmaCReport(cases, verified, min(c.margin for c in cases), float(sweep[i]), float(ds[i]))


def sweep_table(ds) -> list[tuple[float, float, float, float]]:
    """Rows ``(d, xi, psi, 2 xi - psi)``."""
    return [(float(d), xi(d), psi(d), 2 * xi(d) - psi(d)) for d in ds]


# -- the survival ODE ------------------------------------------------------------------


def F_closed(d: float, x: float) -> float:
    return math.log1p(2 * d * x) / (2 * d)


def survival_curve(d: float, x: float) -> float:
    """f(x) = (2dx + 1)^{-1/2}: survival of an edge of weight x in T^d."""
    return (2 * d * x + 1) ** -0.5


def ode_residual(d: float, x: float) -> float:
    """|F'(x) - e^{-2 d F(x)}|, with F' by high-precision numerical differentiation."""
    with mpmath.workdps(40):
        F = lambda t: mpmath.log1p(2 * d * t) / (2 * d)
        dF = mpmath.diff(F, mpmath.mpf(x))
        return float(abs(dF - mpmath.exp(-2 * d * F(mpmath.mpf(x)))))


def integral_equation_residual(d: float, x: float, tail: float = 1e-14) -> float:
    """|f(x) - sum_k P(Z = k) (1 - int_0^x f^2)^k| for Z ~ Po(d)."""
    I, _ = integrate.quad(lambda y: survival_curve(d, y) ** 2, 0, x, epsabs=1e-14, epsrel=1e-13)
    kmax = int(stats.poisson(d).isf(tail)) + 1 if d > 0 else 0
    k = np.arange(kmax + 1)
    rhs = math.fsum(stats.poisson(d).pmf(k) * (1 - I) ** k) if d > 0 else 1.0
    return abs(survival_curve(d, x) - rhs)
