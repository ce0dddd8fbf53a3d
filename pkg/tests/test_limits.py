import math

import numpy as np
import pytest
from scipy import special, stats

from lambdacoal import ConfigError
from lambdacoal.limits import (
    DEFAULT_CF_GRID,
    MittagLefflerRef,
    RegimeUnknownError,
    cf_distance,
    classify,
    invert_psi,
    ks_distance,
    ml_moment,
    moment_errors,
    norm_constants,
    psi_one_stable,
    sample_limit_stable,
    stable_cf,
    total_variation,
)
from lambdacoal.measure import Beta, LogLogPareto, LogPareto, Tabulated, Uniform
from lambdacoal.simulate import stream

ALL = [Uniform(), Beta(2, 1), LogPareto(2.0), LogPareto(1.5), LogPareto(1.0), LogPareto(0.5), LogLogPareto()]


def test_classify_examples():
    s = classify(Uniform())
    assert (s.regime, s.m1, s.m2) == (1, pytest.approx(1.0), pytest.approx(1.0))
    s = classify(LogPareto(0.5))
    assert (s.regime, s.alpha, s.L(100.0)) == (5, 0.5, 1.0)
    s = classify(LogPareto(1.5))
    assert (s.regime, s.m1) == (3, pytest.approx(3.0))
    assert classify(LogPareto(1.0)).regime == 4
    s = classify(LogPareto(2.0))
    assert s.regime == 2 and s.L(math.e) == pytest.approx(2.0)
    s = classify(LogLogPareto())
    assert (s.regime, s.alpha) == (5, 0.0)
    assert classify(Beta(2, 1)).regime == 1


def test_classify_tabulated_rejected():
    with pytest.raises(RegimeUnknownError):
        classify(Tabulated((0.0, 1.0), (0.0, 1.0)))


def test_regime_invariants():
    for m in ALL:
        s = classify(m)
        if s.regime == 1:
            assert math.isfinite(s.m2)
        elif s.regime in (3, 4):
            assert 1.0 <= s.alpha < 2.0
        elif s.regime == 5:
            assert 0.0 <= s.alpha < 1.0


def test_norm_constant_examples():
    a, b = norm_constants(classify(Uniform()), log_n=100.0)
    assert (a, b) == (pytest.approx(10.0), pytest.approx(100.0))
    a, _ = norm_constants(classify(Uniform(), "tau"), log_n=100.0)
    assert a == pytest.approx(math.sqrt(200), rel=1e-12)
    assert norm_constants(classify(LogPareto(0.5)), log_n=100.0) == (pytest.approx(10.0), 0.0)


def test_regime3_constants():
    s = classify(LogPareto(1.5))
    a, b = norm_constants(s, 10**8)
    y = math.floor(math.log(1e8))
    assert a == pytest.approx(3.0 ** (-2.5 / 1.5) * y ** (1 / 1.5), rel=1e-12)
    assert b == pytest.approx(math.log(1e8) / 3.0, rel=1e-12)


def test_regime2_root():
    s = classify(LogPareto(2.0))
    a, _ = norm_constants(s, 10**6)
    c = a * s.m1**1.5
    y = math.floor(math.log(1e6))
    assert c * c / (2 * math.log(c)) == pytest.approx(y, rel=1e-9)


def test_regime4_constants():
    s = classify(LogPareto(1.0))
    a, b = norm_constants(s, log_n=50.0)
    assert psi_one_stable(b) == pytest.approx(50.0, rel=1e-12)
    assert a == pytest.approx(b * b / 50.0)


@pytest.mark.parametrize("x", [10.0, 100.0, 1000.0])
def test_psi_inversion_quality(x):
    assert 0.999 <= psi_one_stable(invert_psi(x)) / x <= 1.001


@pytest.mark.parametrize("measure", ALL, ids=str)
def test_a_n_increasing(measure):
    s = classify(measure)
    a = [s.a_of_n(10**k) for k in (3, 6, 9, 12)]
    assert all(x > 0 for x in a)
    assert all(x < y for x, y in zip(a, a[1:]))


def test_norm_constants_small_n():
    with pytest.raises(ValueError):
        norm_constants(classify(Uniform()), 2)


def test_ml_moment_examples():
    for k in range(6):
        assert ml_moment(0.0, k) == pytest.approx(math.factorial(k))
    assert ml_moment(0.5, 1) == pytest.approx(2 / math.pi, rel=1e-14)
    assert ml_moment(0.5, 2) == pytest.approx(2 / math.pi, rel=1e-14)
    assert MittagLefflerRef(0.5).moment(0) == 1.0
    with pytest.raises(ConfigError):
        MittagLefflerRef(1.0)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 0.75])
def test_ml_moment_log_convex(alpha):
    lm = [math.log(ml_moment(alpha, k)) for k in range(7)]
    assert all(lm[k - 1] + lm[k + 1] >= 2 * lm[k] - 1e-12 for k in range(1, 6))


def test_ml_moments_against_stable_subordinator():
    # ML(alpha) is the law of S^{-alpha} / Gamma(1 - alpha) for a positive alpha-stable S with E e^{-sS} = e^{-s^alpha}
    alpha = 0.5
    rng = np.random.default_rng(1)
    # positive 1/2-stable: S = 1 / (4 G), G ~ Gamma(1/2)
    s = 1.0 / (4.0 * rng.gamma(0.5, size=10**6))
    y = s**-alpha / special.gamma(1 - alpha)
    for k in (1, 2, 3):
        assert np.mean(y**k) == pytest.approx(ml_moment(alpha, k), rel=0.02)


def test_stable_cf_examples():
    assert stable_cf(1.5, 0.0) == 1.0
    assert stable_cf(1.0, 0.0) == 1.0
    assert abs(stable_cf(1.5, 1.0)) == pytest.approx(math.exp(-math.sqrt(2 * math.pi)), rel=1e-12)
    for alpha in (1.0, 1.3, 1.5, 1.9):
        for t in (0.3, 1.0, 2.7):
            assert stable_cf(alpha, -t) == pytest.approx(np.conj(stable_cf(alpha, t)), rel=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 1.2, 1.5, 1.8])
def test_stable_cf_modulus(alpha):
    t = np.linspace(-10, 10, 2001)
    mod = np.abs(stable_cf(alpha, t))
    assert np.all(mod <= 1 + 1e-15)
    assert np.all(mod[t != 0] < 1)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_cms_sampler_matches_cf(alpha):
    x = sample_limit_stable(alpha, 10**5, stream(11, int(alpha * 10)))
    assert cf_distance(x, lambda t: stable_cf(alpha, t)) <= 0.02


def test_cms_agrees_with_scipy():
    x = sample_limit_stable(1.5, 20000, stream(12, 0))
    beta, scale = -1.0, (special.gamma(-0.5) * math.cos(0.75 * math.pi)) ** (1 / 1.5)
    ref = stats.levy_stable(1.5, beta, scale=scale)
    ref.dist.parameterization = "S1"
    assert stats.kstest(x, ref.cdf).pvalue > 0.001


def test_ks_distance_examples():
    assert ks_distance([0.5], lambda t: np.clip(t, 0, 1)) == pytest.approx(0.5)
    n = 1000
    q = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_distance(q, stats.norm.cdf) <= 1 / (2 * n) + 1e-12
    z = np.random.default_rng(3).standard_normal(10**5)
    assert ks_distance(z, stats.norm.cdf) <= 0.01
    with pytest.raises(ValueError):
        ks_distance([], stats.norm.cdf)


def test_ks_distance_matches_scipy():
    z = np.random.default_rng(4).standard_normal(500)
    assert ks_distance(z, stats.norm.cdf) == pytest.approx(stats.kstest(z, "norm").statistic, rel=1e-12)


def test_ks_distance_affine_invariance():
    z = np.random.default_rng(5).standard_normal(2000)
    base = ks_distance(z, stats.norm.cdf)
    assert ks_distance(3 * z - 7, lambda t: stats.norm.cdf((t + 7) / 3)) == pytest.approx(base, abs=1e-12)


def test_cf_distance_examples():
    x = np.random.default_rng(6).standard_normal(100)
    assert cf_distance(x, lambda t: np.exp(-t * t / 2), [0.0]) <= 1e-12
    assert cf_distance(np.zeros(10), lambda t: np.exp(-t * t / 2)) > 0
    assert len(DEFAULT_CF_GRID) == 20 and DEFAULT_CF_GRID[-1] == 2.0


def test_moment_errors_examples():
    e = np.random.default_rng(7).standard_exponential(10**6)
    assert max(moment_errors(e, MittagLefflerRef(0.0), 4)) <= 0.02
    assert moment_errors(e, MittagLefflerRef(0.0), 0) == []
    assert moment_errors(np.full(5, ml_moment(0.5, 1)), MittagLefflerRef(0.5), 1) == [pytest.approx(0.0, abs=1e-15)]
    with pytest.raises(ValueError):
        moment_errors(e, MittagLefflerRef(0.0), 5)


def test_total_variation():
    assert total_variation([1, 1, 2, 2], [0.5, 0.5], [1, 2]) == pytest.approx(0.0)
    assert total_variation([1, 1, 1, 3], [0.5, 0.5], [1, 2]) == pytest.approx(0.5)
