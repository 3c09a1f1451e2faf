import math

import numpy as np
import pytest
from scipy.special import loggamma

from nonvanishing.errors import NonPositiveArgument
from nonvanishing.specfun import (
    DEFAULT_CONFIG,
    KernelConfig,
    VCache,
    convergence_check,
    kernel_cutoff,
    lanczos_loggamma,
    weight_V,
    weight_W,
    weight_W_quadrature,
)

# Independent values from mpmath (30 digits) integrating the same contour
# integral with adaptive Gauss-Legendre quadrature.
V_ORACLE = {
    1e-6: 0.9847971981066552,
    1e-2: 0.4731528029254187,
    0.1: 0.10615043608608102,
    0.5: 0.0028566468288950223,
    1.0: 6.9076298607610255e-5,
    2.0: 6.9034895003109013e-8,
    3.0: 8.8138031717916561e-11,
}
W_ORACLE = {
    1e-6: 0.99853118741673731,
    0.01: 0.85312796968997299,
    0.5: 0.094537416454009719,
    1.0: 0.0042289407026178194,
    2.0: 1.3650609692318494e-7,
}


def test_lanczos_against_scipy():
    z = np.array([0.25 + 1j * t for t in np.linspace(0, 200, 401)] + [3.5 + 2j, 7 + 50j])
    err = np.abs(lanczos_loggamma(z) - loggamma(z))
    assert err.max() < 1e-12


@pytest.mark.parametrize("x", sorted(V_ORACLE))
def test_V_against_oracle(x):
    ref = V_ORACLE[x]
    assert abs(weight_V(x) - ref) <= 1e-11 * max(ref, 1e-3) + 1e-20


@pytest.mark.parametrize("x", sorted(W_ORACLE))
def test_W_against_oracle(x):
    ref = W_ORACLE[x]
    assert abs(weight_W(x) - ref) < 1e-14
    assert abs(weight_W_quadrature(x) - ref) < 1e-11


def test_W_identity_on_log_grid():
    x = np.geomspace(1e-3, 10, 200)
    assert np.max(np.abs(weight_W(x) - weight_W_quadrature(x))) < 1e-9


def test_W_small_and_large():
    # W(1e-6) = 1 - 1.47e-3: the approach to 1 is like x^(1/2), not faster
    assert abs(weight_W(1e-6) - 1) < 2e-3
    assert abs(weight_W(1e-6) - 1) > 1e-4
    assert weight_W(10.0) < 1e-30
    assert weight_W(1.0) > weight_W(2.0)


def test_V_small_and_large():
    # the double pole at s = -1/2 leaves a x^(1/2) log x correction
    v = weight_V(1e-6)
    assert abs(v - 1) < 2e-2
    assert abs(weight_V(100.0)) < 1e-6


def test_V_convergence_self_check():
    assert convergence_check(weight_V, 1.0) < 1e-10
    assert convergence_check(weight_W_quadrature, np.array([0.01, 1.0, 3.0])) < 1e-10


def test_contour_shift_invariance():
    x = np.geomspace(1e-2, 10, 100)
    literal2 = KernelConfig(sigma=2.0, near_sigma=None)
    literal3 = KernelConfig(sigma=3.0, near_sigma=None)
    assert np.max(np.abs(weight_V(x, literal2) - weight_V(x, literal3))) < 1e-10
    assert np.max(np.abs(weight_W_quadrature(x, literal2) - weight_W_quadrature(x, literal3))) < 1e-10


def test_near_line_matters_only_for_rounding():
    x = np.geomspace(1e-2, 0.3, 20)
    gap = np.abs(weight_V(x) - weight_V(x, KernelConfig(near_sigma=None)))
    assert gap.max() < 1e-11


def test_bounds_and_monotonicity():
    x = np.geomspace(1e-4, 1, 60)
    w = weight_W(x)
    v = weight_V(x)
    assert np.all((w > 0) & (w < 1))
    assert np.all((v > 0) & (v <= 1 + 1e-8))
    x = np.geomspace(1e-4, 4, 200)
    assert np.all(np.diff(weight_W(x)) < 0)
    assert np.all(np.diff(weight_V(x)) < 0)


def test_nonpositive_argument():
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(NonPositiveArgument):
            weight_V(bad)
        with pytest.raises(NonPositiveArgument):
            weight_W(bad)
    with pytest.raises(NonPositiveArgument):
        weight_V(np.array([1.0, 0.0]))


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(sigma=0.0)
    with pytest.raises(ValueError):
        KernelConfig(step=-1.0)


def test_cutoffs():
    cv = kernel_cutoff(weight_V, 1e-16)
    cw = kernel_cutoff(weight_W, 1e-16)
    assert 4.5 < cv < 6
    assert 3 < cw < 3.5
    assert weight_V(cv) < 1e-16 <= weight_V(cv * (1 - 1e-5))


def test_vcache_accuracy():
    cache = VCache(x_min=1e-6)
    x = np.geomspace(2e-6, 4.0, 500)
    exact = weight_V(x)
    err = np.abs(cache(x) - exact)
    assert err.max() < 2e-8
    assert (err / exact).max() < 2e-5
    assert (err / exact)[x < 1].max() < 5e-6
    assert cache(cache.x_max * 1.1) == 0.0
