"""Collision rates, death-chain rates and jump laws.

``lambda_{m,k} = int x**k (1-x)**(m-k) nu(dx)`` is the rate at which a given
``k``-tuple among ``m`` particles merges.  The block-counting process jumps
from ``n`` to ``m`` at rate ``g_{n,m} = C(n, m-1) lambda_{n, n-m+1}`` and
leaves ``n`` at total rate ``g_n``.  Everything is carried in log space:
``C(n, m-1) lambda_{n,.}`` spans hundreds of orders of magnitude already at
``n = 10**3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special, stats

from .errors import ConfigError, NumericalError
from .measure import Beta, Tabulated, quad

N_MAX_DEFAULT = 10_000
QMC_LOG2_POINTS = 16
QMC_SCRAMBLES = 16


def log_binom(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


# ---------------------------------------------------------------------------
# lambda_{m,k}
# ---------------------------------------------------------------------------


def _log_lambda_beta(theta, b, m, k):
    return special.betaln(k + theta, m - k + b) - special.betaln(theta, b)


def _log_lambda_quad(measure, m, k):
    """``log lambda_{m,k}`` by adaptive quadrature over ``s = log V``.

    The integrand is rescaled by its maximum so the relative tolerance is
    meaningful however small the rate is.
    """
    log_density_s = measure.log_density_s
    s_lo = math.log(measure.v_min) if measure.v_min > 0 else -math.inf

    def f(s):
        v = math.exp(s) if s < 709.0 else math.inf
        if v == 0.0:
            return -math.inf
        log_x = math.log(-math.expm1(-v)) if v < 745 else 0.0
        decay = (m - k) * v if m > k else 0.0
        return k * log_x - decay + log_density_s(s)

    lo = s_lo if math.isfinite(s_lo) else -60.0
    grid = np.linspace(lo, 8.0, 341)
    values = np.array([f(s) for s in grid])
    i = int(np.argmax(values))
    a = grid[max(i - 1, 0)]
    c = grid[min(i + 1, grid.size - 1)]
    if c > a:
        res = optimize.minimize_scalar(lambda s: -f(s), bounds=(a, c), method="bounded", options={"xatol": 1e-12})
        mode, fmax = (res.x, -res.fun) if -res.fun >= values[i] else (grid[i], values[i])
    else:
        mode, fmax = grid[i], values[i]
    if not math.isfinite(fmax):
        raise NumericalError("collision-rate integrand has no finite maximum", m=m, k=k)

    def g(s):
        return math.exp(f(s) - fmax)

    kw = dict(epsabs=0.0, epsrel=1e-11, limit=400, what=f"lambda_{{{m},{k}}}")
    left = quad(g, s_lo, mode, **kw) if mode > s_lo else 0.0
    right = quad(g, mode, math.inf, **kw)
    return fmax + math.log(left + right)


@lru_cache(maxsize=8)
def _qmc_log_v(measure: Tabulated):
    """Scrambled-Sobol draws of ``V`` (``QMC_SCRAMBLES`` independent scrambles)."""
    out = []
    for r in range(QMC_SCRAMBLES):
        sampler = stats.qmc.Sobol(d=1, scramble=True, bits=64, seed=np.random.default_rng([2718, r]))
        u = sampler.random_base2(QMC_LOG2_POINTS)[:, 0]
        out.append(measure.quantile_v(u))
    v = np.array(out)
    v = np.maximum(v, 1e-300)
    with np.errstate(divide="ignore"):
        log_x = np.log(-np.expm1(-v))
    return log_x, -v


def _qmc_log_mean(log_terms):
    """Per-scramble log-mean-exp, pooled estimate and its relative standard error."""
    per = special.logsumexp(log_terms, axis=-1) - math.log(log_terms.shape[-1])
    pooled = special.logsumexp(per, axis=0) - math.log(per.shape[0])
    rel = np.exp(per - pooled)
    rel_se = np.std(rel, axis=0, ddof=1) / math.sqrt(per.shape[0])
    return pooled, rel_se


def lambda_mk_qmc(measure: Tabulated, m, k):
    """``(lambda_{m,k}, standard error)`` by randomised quasi-Monte Carlo."""
    log_x, log_eta = _qmc_log_v(measure)
    log_val, rel_se = _qmc_log_mean(k * log_x + (m - k) * log_eta)
    value = math.exp(float(log_val))
    return value, value * float(rel_se)


def log_lambda_mk(measure, m, k, method="auto"):
    if not (isinstance(m, (int, np.integer)) and isinstance(k, (int, np.integer)) and 1 <= k <= m):
        raise ValueError(f"need integers 1 <= k <= m, got m={m!r}, k={k!r}")
    if method == "auto":
        method = "closed" if isinstance(measure, Beta) else ("qmc" if isinstance(measure, Tabulated) else "quad")
    if method == "closed":
        if not isinstance(measure, Beta):
            raise ValueError("closed-form rates exist only for the Beta family")
        return float(_log_lambda_beta(measure.theta, measure.b, m, k))
    if method == "qmc":
        value, _ = lambda_mk_qmc(measure, m, k)
        return math.log(value)
    if method == "quad":
        return _log_lambda_quad(measure, m, k)
    raise ValueError(f"unknown method {method!r}")


def lambda_mk(measure, m, k, method="auto"):
    """``int x**k (1-x)**(m-k) nu(dx)`` for ``1 <= k <= m``."""
    return math.exp(log_lambda_mk(measure, m, k, method))


def annihilator_rate(measure, m, k):
    """Rate at which ``m`` annihilator particles lose exactly ``k``: ``C(m, k) lambda_{m,k}``."""
    return math.exp(log_binom(m, k) + log_lambda_mk(measure, m, k))


# ---------------------------------------------------------------------------
# g_{n,m}, g_n
# ---------------------------------------------------------------------------


def log_g_nm(measure, n, m, method="auto"):
    if not (2 <= n and 1 <= m <= n - 1):
        raise ValueError(f"need 2 <= n and 1 <= m <= n-1, got n={n}, m={m}")
    return float(log_binom(n, m - 1)) + log_lambda_mk(measure, n, n - m + 1, method)


def g_nm(measure, n, m, method="auto"):
    """Rate of the jump ``n -> m`` of the block-counting process."""
    return math.exp(log_g_nm(measure, n, m, method))


def g_total(measure, n, method="auto"):
    """``int (1 - (1-x)**n - n x (1-x)**(n-1)) nu(dx)``, the total rate out of ``n``."""
    if n < 2:
        raise ValueError(f"g_total needs n >= 2, got {n}")
    if method == "auto":
        method = "closed" if isinstance(measure, Beta) else ("qmc" if isinstance(measure, Tabulated) else "quad")
    if method == "closed":
        th, b = measure.theta, measure.b
        base = special.betaln(th, b)
        none = math.exp(special.betaln(th, n + b) - base)
        one = n * math.exp(special.betaln(th + 1, n - 1 + b) - base)
        return 1.0 - none - one
    if method == "qmc":
        log_x, _ = _qmc_log_v(measure)
        # P(Bin(n, x) >= 2) = I_x(2, n-1)
        vals = special.betainc(2, n - 1, np.exp(log_x)).mean(axis=1)
        return float(vals.mean())
    if method == "quad":
        s_lo = math.log(measure.v_min) if measure.v_min > 0 else -math.inf

        def integrand(s):
            v = math.exp(s) if s < 709.0 else math.inf
            x = -math.expm1(-v) if v < 745 else 1.0
            return special.betainc(2, n - 1, x) * math.exp(measure.log_density_s(s))

        return quad(integrand, s_lo, math.inf, epsabs=0.0, epsrel=1e-11, limit=400, what=f"g_{n}")
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateTable:
    """Rates for states ``1..n_max``.

    ``log_lambda[m][k-1] = log lambda_{m,k}``; ``log_gnm[n][m-1] = log g_{n,m}``;
    ``jump[n][m-1] = g_{n,m} / g_n``; ``log_g[n] = log g_n``.  Lists are padded
    so they can be indexed by state directly.
    """

    measure: object
    n_max: int
    log_lambda: list = field(repr=False)
    log_gnm: list = field(repr=False)
    log_g: np.ndarray = field(repr=False)
    jump: list = field(repr=False)
    cum_jump: list = field(repr=False)

    @classmethod
    def build(cls, measure, n_max, method="auto"):
        if not isinstance(n_max, (int, np.integer)) or n_max < 1:
            raise ConfigError(f"n_max must be a positive integer, got {n_max!r}")
        if n_max > N_MAX_DEFAULT:
            raise ConfigError(f"n_max={n_max} exceeds the table cap {N_MAX_DEFAULT}; use the epoch sampler")
        if method == "auto":
            method = "closed" if isinstance(measure, Beta) else ("qmc" if isinstance(measure, Tabulated) else "quad")

        log_lambda = [np.empty(0)]
        for m in range(1, n_max + 1):
            k = np.arange(1, m + 1)
            if method == "closed":
                row = _log_lambda_beta(measure.theta, measure.b, m, k)
            elif method == "qmc":
                log_x, log_eta = _qmc_log_v(measure)
                row = [float(_qmc_log_mean(kk * log_x + (m - kk) * log_eta)[0]) for kk in k]
            else:
                row = np.array([_log_lambda_quad(measure, m, int(kk)) for kk in k])
            log_lambda.append(np.asarray(row, dtype=float))

        log_gnm = [np.empty(0), np.empty(0)]
        log_g = np.full(n_max + 1, np.nan)
        jump = [np.empty(0), np.empty(0)]
        cum_jump = [np.empty(0), np.empty(0)]
        for n in range(2, n_max + 1):
            m = np.arange(1, n)
            row = log_binom(n, m - 1) + log_lambda[n][n - m]  # k = n - m + 1
            log_gnm.append(row)
            log_g[n] = math.log(g_total(measure, n, method))
            p = np.exp(row - special.logsumexp(row))
            p /= p.sum()
            jump.append(p)
            c = np.cumsum(p)
            c[-1] = 1.0
            cum_jump.append(c)
        return cls(measure, int(n_max), log_lambda, log_gnm, log_g, jump, cum_jump)

    def lambda_mk(self, m, k):
        return math.exp(self.log_lambda[m][k - 1])

    def g_nm(self, n, m):
        return math.exp(self.log_gnm[n][m - 1])

    def g(self, n):
        return math.exp(self.log_g[n])

    def recursion_error(self):
        """Max relative error of ``lambda_{m,k} = lambda_{m+1,k} + lambda_{m+1,k+1}``."""
        worst = 0.0
        for m in range(1, self.n_max):
            lhs = self.log_lambda[m]
            nxt = self.log_lambda[m + 1]
            rhs = np.logaddexp(nxt[:-1], nxt[1:])
            worst = max(worst, float(np.max(np.abs(np.expm1(rhs - lhs)))))
        return worst

    def row_sum_error(self):
        """Max relative error of ``g_n = sum_m g_{n,m}`` (direct integral vs. sum)."""
        worst = 0.0
        for n in range(2, self.n_max + 1):
            total = special.logsumexp(self.log_gnm[n])
            worst = max(worst, abs(math.expm1(total - self.log_g[n])))
        return worst


def jump_distribution(table: RateTable, n):
    """``(p_{n,1}, ..., p_{n,n-1})``, the law of the next state from ``n``."""
    if not 2 <= n <= table.n_max:
        raise ValueError(f"state {n} outside the table range 2..{table.n_max}")
    return table.jump[n]


@lru_cache(maxsize=16)
def cached_table(measure, n_max):
    return RateTable.build(measure, n_max)
