import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from lambdacoal import ConfigError
from lambdacoal.measure import Beta, LogLogPareto, LogPareto, Tabulated, Uniform
from lambdacoal.rates import (
    RateTable,
    annihilator_rate,
    cached_table,
    g_nm,
    g_total,
    jump_distribution,
    lambda_mk,
    lambda_mk_qmc,
    log_g_nm,
)


def test_lambda_examples():
    assert lambda_mk(Uniform(), 2, 2) == pytest.approx(1 / 3, rel=1e-14)
    assert lambda_mk(Uniform(), 3, 2) == pytest.approx(1 / 12, rel=1e-14)
    assert lambda_mk(Beta(1, 2), 2, 2) == pytest.approx(1 / 6, rel=1e-14)


def test_g_examples():
    assert g_nm(Uniform(), 3, 2) == pytest.approx(0.25, rel=1e-14)
    assert g_nm(Uniform(), 3, 1) == pytest.approx(0.25, rel=1e-14)
    assert g_total(Uniform(), 3) == pytest.approx(0.5, rel=1e-14)
    assert g_total(Uniform(), 2) == pytest.approx(1 / 3, rel=1e-14)
    g10 = g_total(Uniform(), 10)
    for m in range(1, 10):
        assert g_nm(Uniform(), 10, m) / g10 == pytest.approx(1 / 9, rel=1e-12)


@pytest.mark.parametrize("measure", [Uniform(), Beta(2, 1), LogPareto(0.5), LogPareto(1.5), LogLogPareto()], ids=str)
def test_g2_equals_lambda22(measure):
    assert g_total(measure, 2) == pytest.approx(lambda_mk(measure, 2, 2), rel=1e-8)


def test_rejects_bad_indices():
    with pytest.raises(ValueError):
        lambda_mk(Uniform(), 3, 4)
    with pytest.raises(ValueError):
        g_nm(Uniform(), 3, 3)
    with pytest.raises(ValueError):
        g_total(Uniform(), 1)


@pytest.mark.parametrize("measure", [Beta(2, 1), Beta(0.5, 3), Beta(1, 2)], ids=str)
def test_quad_agrees_with_closed_form(measure):
    for n in (2, 5, 17, 60, 100):
        for m in sorted({1, n // 2, n - 1}):
            exact = g_nm(measure, n, m, method="closed")
            assert g_nm(measure, n, m, method="quad") == pytest.approx(exact, rel=1e-8)
        assert g_total(measure, n, method="quad") == pytest.approx(g_total(measure, n, method="closed"), rel=1e-8)


def test_quad_handles_tiny_rates():
    # g_{100,1}: all 100 particles merge; about 1e-30 for this measure
    log_exact = log_g_nm(Beta(1, 60), 100, 1, method="closed")
    assert log_g_nm(Beta(1, 60), 100, 1, method="quad") == pytest.approx(log_exact, rel=1e-9)


def test_logpareto_lambda_against_direct_quadrature():
    m = LogPareto(1.5)
    f = lambda v: (-math.expm1(-v)) ** 2 * math.exp(-3 * v) * 1.5 * v**-2.5
    ref = integrate.quad(f, 1, math.inf, epsrel=1e-12)[0]
    assert lambda_mk(m, 5, 2) == pytest.approx(ref, rel=1e-9)


def test_annihilator_rate_binomial_factor():
    assert annihilator_rate(Uniform(), 4, 2) == pytest.approx(6 * lambda_mk(Uniform(), 4, 2), rel=1e-14)
    # rates out of m sum to 1 - lambda_{m,0} = 1 - 1/(m+1) for the uniform measure
    m = 7
    total = sum(annihilator_rate(Uniform(), m, k) for k in range(1, m + 1))
    assert total == pytest.approx(1 - 1 / (m + 1), rel=1e-13)


@pytest.mark.parametrize("measure", [Uniform(), Beta(2, 1), Beta(1, 2)], ids=str)
def test_table_identities_closed(measure):
    t = RateTable.build(measure, 200)
    assert t.recursion_error() <= 1e-10
    assert t.row_sum_error() <= 1e-10
    for n in range(2, 201):
        assert abs(t.jump[n].sum() - 1) <= 1e-12


@pytest.mark.parametrize("measure", [LogPareto(0.5), LogPareto(1.5), LogLogPareto()], ids=str)
def test_table_identities_quadrature(measure):
    t = RateTable.build(measure, 30)
    # three combined quadrature tolerances
    assert t.recursion_error() <= 3e-8
    assert t.row_sum_error() <= 3e-8


def test_jump_distribution_examples():
    t = RateTable.build(Uniform(), 5)
    np.testing.assert_allclose(jump_distribution(t, 5), [0.25] * 4, rtol=0, atol=1e-14)
    np.testing.assert_allclose(jump_distribution(t, 2), [1.0])
    with pytest.raises(ValueError):
        jump_distribution(t, 6)


@pytest.mark.parametrize("b", [0.5, 2.0, 5.0])
def test_beta1b_jump_matches_w_ratio(b):
    t = RateTable.build(Beta(1, b), 80)
    for n in range(2, 81):
        m = np.arange(1, n)
        w = np.exp(special.gammaln(m + b - 1) - special.gammaln(m))
        np.testing.assert_allclose(t.jump[n], w / w.sum(), rtol=0, atol=1e-10)


def test_table_cap():
    with pytest.raises(ConfigError):
        RateTable.build(Uniform(), 10_001)
    with pytest.raises(ConfigError):
        RateTable.build(Uniform(), 0)


def test_large_table_is_finite():
    t = RateTable.build(Beta(0.5, 0.5), 2000)
    assert np.all(np.isfinite(t.log_g[2:]))
    assert all(np.all(np.isfinite(p)) for p in t.jump[2:])
    assert t.row_sum_error() <= 1e-10


def test_cached_table_reused():
    assert cached_table(Uniform(), 20) is cached_table(Uniform(), 20)


def test_tabulated_qmc_standard_error():
    # V uniform on [0, 2]: lambda_{2,2} = E (1 - e^{-V})^2
    m = Tabulated((0.0, 1.0), (0.0, 2.0))
    exact = 1 - (1 - math.exp(-2)) + (1 - math.exp(-4)) / 4
    value, se = lambda_mk_qmc(m, 2, 2)
    assert se < 1e-5
    assert abs(value - exact) <= 5 * se + 1e-12


def test_tabulated_table_identities():
    m = Tabulated((0.0, 0.3, 1.0), (0.1, 0.5, 4.0))
    t = RateTable.build(m, 25)
    assert t.recursion_error() <= 1e-10
    assert t.row_sum_error() <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(2, 300))
def test_beta_row_sum_property(theta, b, n):
    m = Beta(theta, b)
    total = sum(g_nm(m, n, j) for j in range(1, n))
    assert total == pytest.approx(g_total(m, n), rel=1e-10)
