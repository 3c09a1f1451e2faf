import math

import mpmath
import numpy as np
import pytest

from nonvanishing.arith import build_prime_context
from nonvanishing.characters import DirichletCharacter, char_values, enumerate_even_primitive, gauss_sum
from nonvanishing.errors import LengthTooSmall, NonvanishingError, OddCharacter
from nonvanishing.lmoments import (
    MollifierParams,
    central_value,
    central_value_squared,
    central_values,
    central_values_squared,
    family_values,
    first_moment,
    first_moment_orthogonality,
    moment_report,
    mollifier0_value,
    mollifier_coeffs,
    mollifier_value,
    second_moment,
)
from nonvanishing.lmoments.afe import first_afe_terms
from nonvanishing.lmoments.mollifier import piece_length

# L(1/2, chi) for the quadratic character mod 5, from mpmath's Hurwitz-zeta
# based Dirichlet L-function at 25 digits.
L_QUADRATIC_5 = 0.2317509475040157558833837


def mpmath_central_value(ctx, chi):
    table = [complex(v) for v in char_values(ctx, chi, np.arange(ctx.p))]
    return complex(mpmath.dirichlet(0.5, table))


def test_central_value_p5():
    ctx = build_prime_context(5)
    v = central_value(ctx, DirichletCharacter(5, 2))
    assert abs(v - L_QUADRATIC_5) < 1e-6
    assert abs(v - L_QUADRATIC_5) < 1e-12
    assert central_value_squared(ctx, DirichletCharacter(5, 2)) > 0


@pytest.mark.parametrize("p,j", [(11, 2), (11, 4), (13, 6), (101, 10), (101, 50)])
def test_central_value_against_hurwitz_oracle(p, j):
    ctx = build_prime_context(p)
    chi = DirichletCharacter(p, j)
    assert abs(central_value(ctx, chi) - mpmath_central_value(ctx, chi)) < 1e-10


def test_central_value_rejects_odd_and_principal():
    ctx = build_prime_context(11)
    with pytest.raises(OddCharacter):
        central_value(ctx, DirichletCharacter(11, 1))
    with pytest.raises(OddCharacter):
        central_value_squared(ctx, DirichletCharacter(11, 3))
    with pytest.raises(NonvanishingError):
        central_value(ctx, DirichletCharacter(11, 0))


@pytest.mark.parametrize("p", [11, 101])
def test_afe_cross_consistency_direct(p):
    ctx = build_prime_context(p)
    for chi in enumerate_even_primitive(ctx):
        L = central_value(ctx, chi)
        L2 = central_value_squared(ctx, chi)
        if L2 > 1e-6:
            assert abs(abs(L) ** 2 - L2) / L2 < 1e-8


def test_family_transforms_match_direct():
    ctx = build_prime_context(61)
    chars = enumerate_even_primitive(ctx)
    L = central_values(ctx)
    L2 = central_values_squared(ctx)
    for i, chi in enumerate(chars):
        assert abs(L[i] - central_value(ctx, chi)) < 1e-12
        assert abs(L2[i] - central_value_squared(ctx, chi)) < 1e-11


def test_afe_truncation_reported():
    ctx = build_prime_context(101)
    n, a, trunc = first_afe_terms(ctx)
    assert trunc.length == n.size
    assert trunc.tail_bound < 1e-12


def test_mollifier_coeffs_examples():
    y = mollifier_coeffs(4)
    assert y[1] == 1.0
    assert abs(y[2] - (-0.5)) < 1e-15
    assert abs(y[3] + math.log(4 / 3) / math.log(4)) < 1e-15
    assert mollifier_coeffs(9)[4] == 0
    assert all(mollifier_coeffs(L)[1] == 1.0 for L in (2, 3, 17, 1000))
    assert mollifier_coeffs(10).size == 10
    with pytest.raises(LengthTooSmall):
        mollifier_coeffs(1)


def test_piece_length_floor():
    assert piece_length(101, 0.5) == 10
    assert piece_length(100003, 0.2) == 10
    assert piece_length(10007, 0.3) == 15
    assert piece_length(1009, 0.0) == 1


def test_mollifier_unit_lengths():
    ctx = build_prime_context(101)
    params = MollifierParams(101, 1e-6, 0.0, 0.7, 0.3)
    assert params.long_len == params.short_len == 1
    for chi in enumerate_even_primitive(ctx)[:10]:
        tau = gauss_sum(ctx, chi)
        expected = 0.7 + 0.3 * tau.conjugate() / math.sqrt(101)
        assert abs(mollifier_value(ctx, chi, params) - expected) < 1e-12


def test_balanced_mollifier_coincides():
    ctx = build_prime_context(499)
    params = MollifierParams(499, 0.3, 0.0, 1.0, 1.0)
    for chi in enumerate_even_primitive(ctx)[:20]:
        assert mollifier_value(ctx, chi, params) == mollifier0_value(ctx, chi, 0.3)


def test_second_piece_bound():
    ctx = build_prime_context(499)
    params = MollifierParams(499, 0.3, 0.1, 0.0, 0.8)
    y = params.y_short
    m = np.nonzero(y)[0]
    bound = 0.8 * np.sum(np.abs(y[m]) / np.sqrt(m))
    for chi in enumerate_even_primitive(ctx):
        assert abs(mollifier_value(ctx, chi, params)) <= bound + 1e-12


def test_unmollified_first_moment():
    ctx = build_prime_context(101)
    params = MollifierParams(101, 1e-6, 0.0, 1.0, 0.0)
    S1 = first_moment(ctx, params)
    assert abs(S1 - 2 / 101 * np.sum(central_values(ctx))) < 1e-12


@pytest.mark.parametrize("p", [101, 499, 1009])
def test_dual_path_moments(p):
    ctx = build_prime_context(p)
    params = MollifierParams(p, 0.2, 0.1, 0.5, 0.5)
    a = first_moment(ctx, params, method="dft")
    b = first_moment(ctx, params, method="naive")
    assert abs(a - b) / abs(a) < 1e-9
    s_a = second_moment(ctx, params, method="dft").S2
    s_b = second_moment(ctx, params, method="naive").S2
    assert abs(s_a - s_b) / s_a < 1e-9


def test_naive_threads_deterministic():
    ctx = build_prime_context(499)
    params = MollifierParams(499, 0.25, 0.1, 0.6, 0.4)
    one = family_values(ctx, params, method="naive", workers=1)
    four = family_values(ctx, params, method="naive", workers=4)
    assert np.array_equal(one.L, four.L)
    assert np.array_equal(one.A, four.A)


@pytest.mark.parametrize("p", [101, 199, 499])
def test_orthogonality_oracle(p):
    ctx = build_prime_context(p)
    params = MollifierParams(p, 0.25, 0.125, 0.6, 0.4)
    direct = first_moment(ctx, params)
    expanded = first_moment_orthogonality(ctx, params)
    assert abs(direct.imag) < 1e-12
    assert abs(expanded["S1"] - direct.real) / abs(direct) < 1e-6


@pytest.mark.parametrize("p", [101, 1009])
def test_decomposition_and_cauchy_schwarz(p):
    ctx = build_prime_context(p)
    params = MollifierParams(p, 0.2, 0.1, 0.6, 0.4)
    sm = second_moment(ctx, params)
    assert abs(sm.decomposition_sum - sm.S2) / sm.S2 < 1e-9
    assert abs(sm.cross_imag) < 1e-9
    S1 = first_moment(ctx, params)
    assert sm.S2 >= 0
    assert abs(S1) ** 2 <= sm.S2 * (1 + 1e-12)


def test_one_piece_second_moment():
    ctx = build_prime_context(499)
    params = MollifierParams(499, 0.25, 0.1, 1.0, 0.0)
    sm = second_moment(ctx, params)
    direct = 0.0
    L = central_values(ctx)
    for i, chi in enumerate(enumerate_even_primitive(ctx)):
        direct += abs(L[i] * mollifier_value(ctx, chi, params)) ** 2
    direct *= 2 / 499
    assert abs(sm.S2 - direct) / direct < 1e-12
    assert sm.cross == 0 and sm.square_short == 0


def test_moment_report_fields():
    ctx = build_prime_context(1009)
    params = MollifierParams(1009, 0.2, 0.1, 0.6, 0.4)
    rep = moment_report(ctx, params, check_naive=True)
    d = rep.to_dict()
    for key in ("S1", "S2", "S1_predicted", "S2_predicted", "ratio", "S1_deviation", "S2_ratio", "min_abs_L",
                "nonvanishing_threshold", "decomposition", "path_gap_S1", "path_gap_S2"):
        assert key in d
    assert d["S1_predicted"] == 1.0
    assert abs(d["S2_predicted"] - (0.36 / 0.3 + 0.16 / 0.2 + 1)) < 1e-12
    assert rep.path_gap_S1 < 1e-9
    assert rep.family_size == (1009 - 3) // 2
    assert rep.nonvanishing_count == int(np.sum(np.abs(central_values(ctx)) > 1e-8 * 1009 ** 0.25))


def test_long_mollifier_warns(caplog):
    ctx = build_prime_context(101)
    params = MollifierParams(101, 0.45, 0.1, 0.5, 0.5)
    assert params.exceeds_half
    first_moment(ctx, params)
    assert "sqrt(p)" in caplog.text
    assert moment_report(ctx, params).warnings
