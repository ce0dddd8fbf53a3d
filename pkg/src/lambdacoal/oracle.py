"""Exact small-n laws used as ground truth for the samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError

DP_MAX_N = 500


@dataclass(frozen=True)
class ExactDistribution:
    n: int
    support: np.ndarray
    pmf: np.ndarray

    @property
    def mean(self):
        return float(np.dot(self.support, self.pmf))

    @property
    def variance(self):
        mu = self.mean
        return float(np.dot((self.support - mu) ** 2, self.pmf))


def _check(table, n):
    if not 1 <= n <= table.n_max:
        raise ConfigError(f"n={n} outside the rate table range 1..{table.n_max}")
    if n > DP_MAX_N:
        raise ConfigError(f"exact oracle limited to n <= {DP_MAX_N} (O(n^3) work), got n={n}")


def exact_x_distribution(table, n):
    """Law of the number of collisions from ``n`` by first-step analysis.

    ``P(X_n = j) = sum_m p_{n,m} P(X_m = j - 1)`` with ``X_1 = 0``.
    """
    _check(table, n)
    if n == 1:
        return ExactDistribution(1, np.array([0]), np.array([1.0]))
    # dist[m, j] = P(X_m = j), j = 0..n-1
    dist = np.zeros((n + 1, n))
    dist[1, 0] = 1.0
    for m in range(2, n + 1):
        mixed = table.jump[m] @ dist[1:m]
        dist[m, 1:] = mixed[:-1]
    support = np.arange(1, n)
    return ExactDistribution(n, support, dist[n, 1:].copy())


def exact_expected_times(table, n):
    """``E tau_m`` for ``m = 0..n`` (entry 0 is NaN): ``E tau_m = 1/g_m + sum_l p_{m,l} E tau_l``."""
    _check(table, n)
    e = np.full(n + 1, np.nan)
    e[1] = 0.0
    for m in range(2, n + 1):
        e[m] = np.exp(-table.log_g[m]) + float(table.jump[m] @ e[1:m])
    return e


def indicator_probabilities(b, n):
    """``q_k = w_k / (w_1 + ... + w_k)`` for ``k = 1..n-1``, ``w_k = Gamma(k+b-1)/Gamma(k)``."""
    k = np.arange(1, n)
    log_w = special.gammaln(k + b - 1.0) - special.gammaln(k)
    log_cum = np.logaddexp.accumulate(log_w)
    return np.exp(log_w - log_cum)


def indicator_distribution(b, n):
    """Law of ``X_n`` for ``nu = Beta(1, b)`` as a sum of independent indicators."""
    if not b > 0:
        raise ConfigError(f"b must be positive, got {b!r}")
    if n < 2:
        raise ConfigError(f"indicator representation needs n >= 2, got {n}")
    q = indicator_probabilities(b, n)
    pmf = np.array([1.0])
    for qk in q:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] += pmf * (1.0 - qk)
        nxt[1:] += pmf * qk
        pmf = nxt
    # q_1 = 1, so no mass at 0
    return ExactDistribution(n, np.arange(1, n), pmf[1:].copy())
