"""Limit regimes, normalising sequences, reference laws and distances.

The number of collisions ``X_n`` (and the absorption time ``tau_n``) obey
one of five limit laws, decided by the tail of ``V = -log(eta)``:

1. ``Var V < inf``: normal, ``b_n = log n / m1``, ``a_n = sqrt(m2 log n / m1**3)``
   (for ``tau_n``: ``m2`` replaced by ``m2 + m1**2``).
2. ``Var V = inf`` with slowly varying truncated second moment: normal.
3. ``P(V > x) ~ x**-alpha L(x)``, ``1 < alpha < 2`` (or ``alpha = 1`` with
   ``m1 < inf``): totally skewed ``alpha``-stable.
4. ``alpha = 1``, ``m1 = inf``: 1-stable.
5. ``0 <= alpha < 1``: ``X_n / a_n`` tends to a Mittag-Leffler law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import ConfigError, NumericalError
from .measure import Beta, LogLogPareto, LogPareto

REGIME_NAMES = {
    1: "normal (finite variance)",
    2: "normal (truncated variance)",
    3: "stable-alpha",
    4: "stable-one",
    5: "mittag-leffler",
}

DEFAULT_CF_GRID = tuple(round(0.1 * i, 1) for i in range(1, 21))


class RegimeUnknownError(ConfigError):
    """No analytic tail is available to decide the limit regime."""


@dataclass(frozen=True)
class RegimeSpec:
    """Limit regime of a measure together with its normalising sequences.

    ``slowly_varying`` names the function ``L`` in the tail condition:
    ``"one"`` (``L = 1``), ``"two_log"`` (``L(x) = 2 log x``, used by the
    truncated-variance regime) or ``"inv_log"`` (``L(x) = 1 / (1 + log x)``).
    """

    regime: int
    alpha: float | None
    m1: float
    m2: float
    functional: str = "X"
    slowly_varying: str = "one"

    def __post_init__(self):
        if self.functional not in ("X", "tau"):
            raise ConfigError(f"functional must be 'X' or 'tau', got {self.functional!r}")
        if self.regime not in REGIME_NAMES:
            raise ConfigError(f"unknown regime {self.regime!r}")

    @property
    def name(self):
        return REGIME_NAMES[self.regime]

    def with_functional(self, functional):
        return RegimeSpec(self.regime, self.alpha, self.m1, self.m2, functional, self.slowly_varying)

    def L(self, x):
        if self.slowly_varying == "one":
            return 1.0
        if self.slowly_varying == "two_log":
            return 2.0 * math.log(x)
        if self.slowly_varying == "inv_log":
            return 1.0 / (1.0 + math.log(x))
        raise ValueError(self.slowly_varying)

    def a_of_n(self, n=None, *, log_n=None):
        return norm_constants(self, n, log_n=log_n)[0]

    def b_of_n(self, n=None, *, log_n=None):
        return norm_constants(self, n, log_n=log_n)[1]


def classify(measure, functional="X"):
    if isinstance(measure, Beta):
        m1, m2 = measure.log_moments()
        return RegimeSpec(1, None, m1, m2, functional)
    if isinstance(measure, LogPareto):
        a = measure.alpha
        m1, m2 = measure.log_moments()
        if a == 2.0:
            return RegimeSpec(2, 2.0, m1, m2, functional, "two_log")
        if a > 1.0:
            return RegimeSpec(3, a, m1, m2, functional)
        if a == 1.0:
            return RegimeSpec(4, 1.0, m1, m2, functional)
        return RegimeSpec(5, a, m1, m2, functional)
    if isinstance(measure, LogLogPareto):
        return RegimeSpec(5, 0.0, math.inf, math.inf, functional, "inv_log")
    raise RegimeUnknownError(f"regime unknown for {measure}: no analytic tail for V")


# ---------------------------------------------------------------------------
# normalising constants
# ---------------------------------------------------------------------------


def _truncated_variance_scale(y):
    """Root ``c >= sqrt(e)`` of ``c**2 / (2 log c) = y`` by bisection."""
    lo, hi = math.sqrt(math.e), 1e12

    def h(c):
        return c * c / (2.0 * math.log(c)) - y

    if h(lo) > 0:
        raise NumericalError("no root of c^2 / L(c) = y: y is below the minimum e", y=y)
    if h(hi) < 0:
        raise NumericalError("root of c^2 / L(c) = y exceeds the bracket", y=y, bracket=(lo, hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10 * lo:
            return 0.5 * (lo + hi)
    raise NumericalError("bisection for the truncated-variance scale did not converge", y=y)


def psi_one_stable(x):
    """``x * int_{exp(-x)}^1 P(eta <= y) / y dy`` for ``LogPareto(1)``: ``x (log x + 1)``."""
    return x * (math.log(x) + 1.0)


def invert_psi(x):
    """``b`` with ``psi_one_stable(b) = x`` for ``x >= 1``."""
    if x < 1.0:
        raise NumericalError("psi inversion needs x >= 1", x=x)
    hi = max(2.0, x)
    try:
        return optimize.brentq(lambda b: psi_one_stable(b) - x, 1.0, hi, xtol=1e-14, rtol=1e-15)
    except (ValueError, RuntimeError) as exc:
        raise NumericalError("psi inversion failed", x=x, detail=str(exc)) from exc


def norm_constants(spec: RegimeSpec, n=None, *, log_n=None):
    """``(a_n, b_n)`` for ``spec``; pass ``log_n`` directly for astronomically large ``n``."""
    if log_n is None:
        if n is None:
            raise ValueError("pass n or log_n")
        if n < 3:
            raise ValueError(f"normalising constants need n >= 3, got {n}")
        log_n = math.log(n)
    if log_n <= math.log(3) - 1e-12:
        raise ValueError(f"normalising constants need n >= 3, got log n = {log_n}")
    r = spec.regime
    if r == 1:
        m1, m2 = spec.m1, spec.m2
        var = m2 + m1 * m1 if spec.functional == "tau" else m2
        return math.sqrt(var * log_n / m1**3), log_n / m1
    if r == 2:
        c = _truncated_variance_scale(math.floor(log_n))
        return spec.m1**-1.5 * c, log_n / spec.m1
    if r == 3:
        if spec.slowly_varying != "one":
            raise ConfigError("stable-alpha constants are implemented for L = 1 only")
        alpha = spec.alpha
        c = math.floor(log_n) ** (1.0 / alpha)
        return spec.m1 ** (-(alpha + 1.0) / alpha) * c, log_n / spec.m1
    if r == 4:
        if spec.slowly_varying != "one":
            raise ConfigError("stable-one constants are implemented for the LogPareto(1) family only")
        b = invert_psi(log_n)
        return b * b / log_n, b
    if r == 5:
        return log_n**spec.alpha / spec.L(log_n), 0.0
    raise ValueError(r)


# ---------------------------------------------------------------------------
# reference laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MittagLefflerRef:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"Mittag-Leffler index must lie in [0, 1), got {self.alpha!r}")

    def moment(self, k):
        return ml_moment(self, k)


def ml_moment(ref, k):
    """``k! / (Gamma(1-alpha)**k Gamma(1 + k alpha))``."""
    alpha = ref.alpha if isinstance(ref, MittagLefflerRef) else float(ref)
    if k < 0:
        raise ValueError("moment order must be >= 0")
    log_m = special.gammaln(k + 1) - k * special.gammaln(1.0 - alpha) - special.gammaln(1.0 + k * alpha)
    return float(np.exp(log_m))


def stable_cf(alpha, t):
    """Characteristic function of the stable limit in regimes 3 and 4."""
    if not 1.0 <= alpha < 2.0:
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    sg = np.sign(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 1.0:
            expo = -at * (math.pi / 2 - 1j * np.log(at) * sg)
        else:
            g = special.gamma(1.0 - alpha)
            expo = -(at**alpha) * g * (math.cos(math.pi * alpha / 2) + 1j * math.sin(math.pi * alpha / 2) * sg)
    out = np.where(at == 0, 1.0 + 0j, np.exp(np.where(at == 0, 0.0, expo)))
    return complex(out) if out.ndim == 0 else out


def limit_stable_params(alpha):
    """``(beta, scale)`` of the regime-3/4 limit in the S1 parametrisation.

    Both limits are totally skewed to the left (``beta = -1``); the scale is
    ``(Gamma(1-alpha) cos(pi alpha / 2))**(1/alpha)`` and ``pi / 2`` at ``alpha = 1``.
    """
    if alpha == 1.0:
        return -1.0, math.pi / 2
    return -1.0, (special.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2)) ** (1.0 / alpha)


def sample_stable(alpha, beta, scale, size, rng, loc=0.0):
    """Chambers-Mallows-Stuck draws from the S1-parametrised stable law."""
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        half = math.pi / 2
        x = (1 / half) * ((half + beta * v) * np.tan(v) - beta * np.log(half * w * np.cos(v) / (half + beta * v)))
        return scale * x + (2 / math.pi) * beta * scale * math.log(scale) + loc
    zeta = beta * math.tan(math.pi * alpha / 2)
    b0 = math.atan(zeta) / alpha
    s0 = (1 + zeta * zeta) ** (1 / (2 * alpha))
    x = s0 * np.sin(alpha * (v + b0)) / np.cos(v) ** (1 / alpha) * (np.cos(v - alpha * (v + b0)) / w) ** ((1 - alpha) / alpha)
    return scale * x + loc


def sample_limit_stable(alpha, size, rng):
    beta, scale = limit_stable_params(alpha)
    return sample_stable(alpha, beta, scale, size, rng)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def ks_distance(sample, cdf):
    """``sup |F_N - F|`` evaluated on both sides of every sample point."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n), 0.0))


def empirical_cf(sample, grid):
    x = np.asarray(sample, dtype=float)
    t = np.asarray(grid, dtype=float)
    return np.exp(1j * np.outer(t, x)).mean(axis=1)


def cf_distance(sample, cf, grid=DEFAULT_CF_GRID):
    """``max_t |empirical CF(t) - cf(t)|`` over ``grid``."""
    if len(sample) == 0 or len(grid) == 0:
        raise ValueError("sample and grid must be non-empty")
    target = np.asarray([cf(t) for t in grid], dtype=complex)
    return float(np.max(np.abs(empirical_cf(sample, grid) - target)))


def moment_errors(sample, ref, k_max):
    """Relative errors ``|mean(sample**k) / ml_moment(k) - 1|`` for ``k = 1..k_max``."""
    if k_max > 4:
        raise ValueError("k_max above 4 is too noisy to be useful")
    x = np.asarray(sample, dtype=float)
    return [abs(float(np.mean(x**k)) / ml_moment(ref, k) - 1.0) for k in range(1, k_max + 1)]


def total_variation(sample, pmf, support):
    """TV distance between the empirical law of an integer sample and ``pmf`` on ``support``.

    Sample mass outside ``support`` counts fully.
    """
    sample = np.asarray(sample)
    support = np.asarray(support)
    pmf = np.asarray(pmf, dtype=float)
    counts = np.array([np.count_nonzero(sample == j) for j in support], dtype=float) / sample.size
    outside = 1.0 - counts.sum()
    return 0.5 * (float(np.abs(counts - pmf).sum()) + outside + max(0.0, 1.0 - pmf.sum()))
