import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonvanishing.arith import build_prime_context
from nonvanishing.errors import NonInvertible, ScaleExceeded, WindowEmpty
from nonvanishing.expsums import (
    HolderSpec,
    NuWindows,
    RowCache,
    divisor_equation_count,
    four_product_identity,
    four_product_sum,
    four_product_sweep,
    holder_pipeline,
    is_degenerate_tuple,
    kloosterman,
    kloosterman_row,
    kloosterman_table,
    nu_histogram,
    nu_statistics,
)
from nonvanishing.lmoments import MollifierParams


def test_kloosterman_examples():
    ctx = build_prime_context(5)
    assert abs(kloosterman(ctx, 0, 0) - 4) < 1e-12
    assert abs(kloosterman(ctx, 1, 0) + 1) < 1e-12
    assert abs(kloosterman(ctx, 1, 1) - (2 + 2 * math.cos(4 * math.pi / 5))) < 1e-12
    assert abs(kloosterman(ctx, 1, 1) - 0.381966) < 1e-6


def test_row_zero():
    ctx = build_prime_context(101)
    row = kloosterman_row(ctx, 0).values
    assert abs(row[0] - 100) < 1e-10
    assert np.max(np.abs(row[1:] + 1)) < 1e-10


def test_row_matches_naive():
    ctx = build_prime_context(199)
    row = kloosterman_row(ctx, 7).values
    naive = np.array([kloosterman(ctx, h, 7) for h in range(199)])
    assert np.max(np.abs(row - naive)) < 1e-8


@pytest.mark.parametrize("p", [1009, 9973])
def test_row_matches_naive_sampled(p):
    ctx = build_prime_context(p)
    rng = np.random.default_rng(p)
    for y in rng.integers(0, p, 3):
        row = kloosterman_row(ctx, int(y)).values
        for h in rng.integers(0, p, 5):
            assert abs(row[h] - kloosterman(ctx, int(h), int(y))) < 1e-8


@pytest.mark.parametrize("p", [61, 101, 199, 499])
def test_weil_symmetry_exhaustive(p):
    ctx = build_prime_context(p)
    K = kloosterman_table(ctx)
    mask = np.ones_like(K, dtype=bool)
    mask[0, 0] = False
    assert np.max(np.abs(K[mask])) <= 2 * math.sqrt(p)
    assert np.max(np.abs(K - K.T)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([61, 101, 499]), st.integers(1, 10 ** 6), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_scaling(p, a, x, y):
    ctx = build_prime_context(p)
    if a % p == 0:
        return
    rows = kloosterman_row
    lhs = rows(ctx, y).values[(a * x) % p]
    rhs = rows(ctx, (a * y) % p).values[x % p]
    assert abs(lhs - rhs) < 1e-9


def test_row_cache_eviction():
    ctx = build_prime_context(61)
    cache = RowCache(ctx, capacity=4)
    for y in range(10):
        cache(y)
    assert len(cache) == 4
    assert cache(9) is cache(9)


def test_four_product_identity_p61():
    ctx = build_prime_context(61)
    for tup in [(1, 2, 3, 4), (1, 1, 1, 1), (2, 5, 5, 7)]:
        a = four_product_sum(ctx, *tup)
        b = four_product_identity(ctx, *tup)
        assert abs(a - b) / max(abs(b), 1.0) < 1e-6


def test_four_product_bounds_p101():
    ctx = build_prime_context(101)
    assert abs(four_product_sum(ctx, 1, 1, 1, 1)) <= 16 * 101 ** 3
    assert abs(four_product_sum(ctx, 1, 2, 3, 4)) / 101 ** 2.5 < 30
    with pytest.raises(NonInvertible):
        four_product_sum(ctx, 1, 2, 3, 101)


def test_degenerate_tuples():
    assert is_degenerate_tuple((1, 1, 2, 2))
    assert is_degenerate_tuple((3, 3, 3, 3))
    assert not is_degenerate_tuple((1, 1, 1, 2))
    assert not is_degenerate_tuple((1, 2, 3, 4))


def test_sweep_matches_direct():
    ctx = build_prime_context(61)
    sweep = four_product_sweep(ctx, 5)
    assert sweep.tuples == 5 ** 4 - sum(1 for t in np.ndindex(5, 5, 5, 5) if is_degenerate_tuple(t))
    val = abs(four_product_sum(ctx, *sweep.argmax)) / 61 ** 2.5
    assert abs(val - sweep.max_ratio) < 1e-9
    assert sweep.degenerate_max_ratio <= 16
    assert sweep.weil_max_ratio <= 1


def test_nu_trivial_windows():
    ctx = build_prime_context(101)
    st_ = nu_statistics(ctx, NuWindows((1, 1), (1, 1), (1, 1)))
    assert st_.nu[1] == 1 and st_.sum_nu == 1 and st_.sum_nu_sq == 1


def test_nu_divisor_equality_p10007():
    ctx = build_prime_context(10007)
    st_ = nu_statistics(ctx, NuWindows((1, 10), (1, 10), (1, 10)))
    assert st_.products_below_p
    assert st_.sum_nu_sq == st_.divisor_count == 12484
    assert st_.sum_nu == 1000


def test_nu_wraparound_inequality():
    ctx = build_prime_context(101)
    st_ = nu_statistics(ctx, NuWindows((1, 30), (1, 30), (1, 30)))
    assert not st_.products_below_p
    assert st_.sum_nu_sq > st_.divisor_count


def test_divisor_count_brute():
    n = k = m = range(1, 5)
    direct = sum(
        1
        for a in n for b in k for c in m for a2 in n for b2 in k for c2 in m
        if a * b * c2 == a2 * b2 * c
    )
    # m1 and m1' share a window, so n k m1' = n' k' m1 has as many solutions
    # as n k m1 = n' k' m1', which is what the product counter tallies
    assert divisor_equation_count(n, k, m) == direct
    assert nu_statistics(build_prime_context(10007), NuWindows((1, 4), (1, 4), (1, 4))).sum_nu_sq == direct


def test_nu_histogram_brute():
    ctx = build_prime_context(31)
    n, k, m = np.arange(1, 8), np.arange(-3, 4), np.arange(2, 6)
    nu = nu_histogram(ctx, n, k, m)
    ref = np.zeros(31, dtype=int)
    for a in n:
        for b in k:
            for c in m:
                if b % 31:
                    ref[(a * b * pow(int(c), -1, 31)) % 31] += 1
    assert np.array_equal(nu, ref)


def test_window_empty():
    with pytest.raises(WindowEmpty):
        nu_statistics(build_prime_context(101), NuWindows((3, 2), (1, 1), (1, 1)))


def _holder_spec(p, N1, N2, M1, M2):
    params = MollifierParams(p, 0.3, 0.1, 0.6, 0.4)
    return HolderSpec(N1, N2, M1, M2, params.y_long, params.y_short)


@pytest.mark.parametrize("p", [101, 199, 499])
def test_holder_direction(p):
    ctx = build_prime_context(p)
    for N1, N2, M1, M2 in [(p / 2, 2.0, 1, 1), (p / 3, 3.5, 2, 1), (20.0, 5.0, 2, 2)]:
        rep = holder_pipeline(ctx, _holder_spec(p, N1, N2, M1, M2))
        assert rep.stage_a <= rep.stage_nu_weighted * (1 + 1e-9)
        assert rep.stage_nu_weighted <= rep.stage_b * (1 + 1e-6)
        assert rep.holds
        assert math.isfinite(rep.ratio_b_over_c) and rep.ratio_b_over_c > 0


def test_holder_fourth_moment_bound():
    ctx = build_prime_context(199)
    rep = holder_pipeline(ctx, _holder_spec(199, 40.0, 3.0, 2, 2))
    assert rep.fourth_moment <= rep.four_product_bound * (1 + 1e-9)


def test_holder_single_m_with_aligned_weight():
    # one m1, one m2, one (k, n2) pair per sign: the chain is tight up to the
    # symmetric +-k duplication
    ctx = build_prime_context(101)
    spec = _holder_spec(101, 101 ** 1.1, 1.0, 1, 1)
    rep = holder_pipeline(ctx, spec)
    assert rep.stage_b / rep.stage_a >= 1 - 1e-6


def test_holder_scale_exceeded(monkeypatch):
    import nonvanishing.expsums as ex

    monkeypatch.setattr(ex, "MAX_TUPLES", 10)
    with pytest.raises(ScaleExceeded):
        holder_pipeline(build_prime_context(101), _holder_spec(101, 10.0, 3.0, 1, 1))
