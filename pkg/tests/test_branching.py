import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from tuzalab.branching import (GWParams, compare_local_law, decreasing_part, depth_profiles,
                               estimate_root_survival, expected_profile, sample_ball, sample_gw_tree,
                               sample_gw_weighted, sample_td_tree, survival_probability, tv_bin_poisson,
                               wilson_interval)
from tuzalab.graph import GnpParams
from tuzalab.rng import UniformStream, make_generator


def test_zero_density_gives_a_bare_edge():
    out = sample_gw_tree(GWParams(0.0, seed=3))
    assert out.tree.num_triangles == 0 and not out.truncated
    est = estimate_root_survival(GWParams(0.0, seed=3), 100)
    assert est.point == 1.0 and survival_probability(0.0) == 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        GWParams(-1.0)
    with pytest.raises(ValueError):
        GWParams(1.0, depth_cap=-1)


def test_uniform_stream_poisson():
    s = UniformStream(5)
    for lam in (0.3, 4.0, 25.0):
        x = np.array([s.poisson(lam) for _ in range(20000)])
        assert abs(x.mean() - lam) < 5 * math.sqrt(lam / len(x))
        assert x.var() == pytest.approx(lam, rel=0.08)


def test_first_generation_is_poisson():
    d = 1.3
    rows, cut = depth_profiles(GWParams(d, depth_cap=1, seed=2), 20000)
    x = rows[:, 1]
    assert cut > 0  # depth-2 children exist, so most trials are cut
    assert abs(x.mean() - d) < 5 * math.sqrt(d / len(x))
    assert x.var() == pytest.approx(d, rel=0.08)
    # goodness of fit on the small counts
    k = np.arange(5)
    obs = np.array([(x == i).sum() for i in k] + [(x >= 5).sum()])
    exp = np.append(stats.poisson(d).pmf(k), stats.poisson(d).sf(4)) * len(x)
    assert stats.chisquare(obs, exp).pvalue > 1e-4


@pytest.mark.parametrize("kind,d", [("S", 0.5), ("S", 0.8), ("T", 1.0), ("T", 1.5)])
def test_depth_profile_means(kind, d):
    cap = 4
    rows, _ = depth_profiles(GWParams(d, depth_cap=cap, node_cap=10**6, seed=11), 6000, kind)
    for i in range(1, cap + 1):
        se = rows[:, i].std(ddof=1) / math.sqrt(len(rows))
        assert abs(rows[:, i].mean() - expected_profile(d, i, kind)) < 4 * se + 1e-9


def test_td_sits_inside_sd():
    params = GWParams(1.0, depth_cap=6, seed=4)
    stream = UniformStream(4)
    prof = np.zeros(7)
    for _ in range(3000):
        out, w = sample_gw_weighted(params, stream)
        inner, iw, kept = decreasing_part(out, w)
        assert inner.tree.triangle_set <= out.tree.triangle_set
        assert np.array_equal(iw.weights, w.weights[kept])
        for t, x in zip(inner.tree.triangles, iw.weights):
            if t.parent is not None:
                assert x < iw.weights[t.parent]
        prof += inner.depth_profile
    for i in range(1, 4):
        assert prof[i] / 3000 == pytest.approx(expected_profile(1.0, i, "T"), rel=0.12)


def test_sampling_is_deterministic():
    p = GWParams(1.2, depth_cap=8, seed=21)
    assert sample_gw_tree(p) == sample_gw_tree(p)
    a, wa = sample_td_tree(p)
    b, wb = sample_td_tree(p)
    assert a == b and np.array_equal(wa.weights, wb.weights)
    assert estimate_root_survival(p, 500) == estimate_root_survival(p, 500)


def test_caps_mark_truncation():
    out = sample_gw_tree(GWParams(3.0, depth_cap=3, node_cap=50, seed=1))
    assert out.truncated and out.tree.num_triangles <= 50
    assert out.tree.depth <= 3


@pytest.mark.parametrize("d", [0.25, 0.5, 1.0])
def test_lazy_and_tree_survival_agree(d):
    n = 20000
    lazy = estimate_root_survival(GWParams(d, seed=1), n, "lazy")
    tree = estimate_root_survival(GWParams(d, seed=2), n, "tree")
    se = math.sqrt(lazy.point * (1 - lazy.point) / n + tree.point * (1 - tree.point) / n)
    assert abs(lazy.point - tree.point) < 4 * se
    assert abs(lazy.point - survival_probability(d)) < 4 * math.sqrt(2 / n)


def test_survival_rejects_bad_arguments():
    with pytest.raises(ValueError):
        estimate_root_survival(GWParams(1.0), 0)
    with pytest.raises(ValueError):
        estimate_root_survival(GWParams(1.0), 10, "nope")


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.19, abs=0.01)
    assert wilson_interval(0, 10)[0] == 0.0


def _tv_mpmath(n, c, p):
    with mpmath.workdps(40):
        p = mpmath.mpf(p)
        lam = n * p
        N = n + c
        total = mpmath.mpf(0)
        kmax = N + 60
        for k in range(kmax + 1):
            b = mpmath.binomial(N, k) * p**k * (1 - p) ** (N - k) if k <= N else 0
            q = mpmath.exp(-lam) * lam**k / mpmath.factorial(k)
            total += abs(b - q)
        # Poisson mass beyond kmax
        total += 1 - sum(mpmath.exp(-lam) * lam**k / mpmath.factorial(k) for k in range(kmax + 1))
        return float(total / 2)


@pytest.mark.parametrize("n,c,p", [(50, 0, 0.02), (50, 5, 0.02), (200, 20, 0.01), (30, 0, 0.3)])
def test_tv_against_high_precision(n, c, p):
    assert tv_bin_poisson(n, c, p) == pytest.approx(_tv_mpmath(n, c, p), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 400), st.integers(0, 40), st.floats(1e-4, 0.2))
def test_tv_bounds(n, c, p):
    tv = tv_bin_poisson(n, c, p)
    base = tv_bin_poisson(n, 0, p)
    assert 0 <= tv <= 1
    # Le Cam for the unshifted case, triangle inequality for the shift
    assert base <= n * p * p + 1e-12
    shift = 0.5 * np.abs(stats.binom(n + c, p).pmf(np.arange(n + c + 1))
                         - stats.binom(n, p).pmf(np.arange(n + c + 1))).sum()
    assert tv <= base + shift + 1e-9


def test_tv_rejects_bad_input():
    with pytest.raises(ValueError):
        tv_bin_poisson(5, -6, 0.1)
    with pytest.raises(ValueError):
        tv_bin_poisson(5, 0, 1.5)
    assert tv_bin_poisson(5, 0, 0.0) == 0.0


def test_lazy_ball_at_zero_density():
    ball = sample_ball(GnpParams(100, 0.0, 1), 3, make_generator(1))
    assert ball.edge_set == {(0, 1)}


def test_local_law_on_a_large_sparse_graph():
    gp = GnpParams.from_d(4000, 0.8, 6)
    rep = compare_local_law(gp, GWParams(0.8, seed=7), 2, 1500)
    assert rep.tree_rate_graph > 0.97
    assert rep.mean_count_graph == pytest.approx(rep.mean_count_gw, rel=0.15)
    assert rep.tv_triangle_count < 0.06
    with pytest.raises(ValueError):
        compare_local_law(gp, GWParams(0.5), 2, 10)
