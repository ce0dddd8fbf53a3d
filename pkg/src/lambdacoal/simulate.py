"""Exact samplers for the coalescent, the annihilator and their coupling.

All samplers work on particle counts.  One Poisson epoch of the sequential
construction draws ``1 - eta`` from ``nu`` and marks each particle 'head'
independently with that probability; heads merge (coalescent) or are
removed (annihilator).  Binomial head counts are drawn on whichever side of
``1/2`` the head probability lies, so that ``eta`` close to 0 (very likely
for heavy-tailed ``V``) is not rounded away.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .rates import cached_table

MASK64 = (1 << 64) - 1

COLUMNS = ("replicate", "n", "X", "tau", "K", "K1", "K0", "sigma", "U", "X_after", "Z", "G")


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


def stream(seed, index):
    """Generator for replicate ``index`` of a run seeded with ``seed``.

    Philox is counter based: the key ``(seed, index)`` selects an independent
    stream, so a replicate's draws do not depend on which worker runs it.
    """
    return np.random.Generator(np.random.Philox(key=[int(seed) & MASK64, int(index) & MASK64]))


def derive_seed(seed, *tags):
    """Mix ``seed`` with integer ``tags`` into a fresh 64-bit seed."""
    words = [int(seed) & MASK64, *(int(t) & MASK64 for t in tags)]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def _heads(rng, m, x, eta):
    """Binomial(m, x) with ``x + eta = 1``; sampled on the small-probability side."""
    if m <= 0:
        return 0
    if x <= 0.5:
        return int(rng.binomial(m, x))
    return m - int(rng.binomial(m, eta))


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class CoalescentSummary:
    n: int
    collisions: int
    absorption_time: float
    merge_sizes: list | None = None


@dataclass
class CoupledSample:
    """One path of the coupled (coalescent, annihilator) pair.

    ``composition`` lists the positive decrements of the primary count;
    ``trace`` (when requested) holds ``(primary, secondary)`` after every epoch.
    """

    n: int
    X_n: int
    tau_n: float
    K_n: int
    K_n1: int
    K_n0: int
    sigma_n: float
    U_n: int
    X_after: int
    composition: list = field(default_factory=list)
    trace: list | None = None

    def check(self):
        """Return the list of violated pathwise relations (empty when all hold)."""
        bad = []
        if sum(self.composition) != self.n or any(p < 1 for p in self.composition):
            bad.append("composition is not a composition of n")
        if self.K_n != len(self.composition):
            bad.append("K_n != number of parts")
        if self.K_n1 != sum(1 for p in self.composition if p == 1):
            bad.append("K_n1 != number of unit parts")
        if not self.K_n - self.K_n1 <= self.X_n:
            bad.append("K_n - K_n1 > X_n")
        if not self.X_n <= self.K_n + self.K_n0 + self.X_after:
            bad.append("X_n > K_n + K_n0 + X_after")
        if not self.sigma_n <= self.tau_n:
            bad.append("sigma_n > tau_n")
        if self.U_n < 1:
            bad.append("U_n < 1")
        if self.U_n == 1 and self.tau_n != self.sigma_n:
            bad.append("U_n == 1 but tau_n != sigma_n")
        if self.trace is not None and any(r < 0 or s < 0 for r, s in self.trace):
            bad.append("negative particle count in trace")
        return bad


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def simulate_coalescent_epochs(measure, n, rng, record_merges=False):
    """Run the sequential (Poisson epoch) construction from ``n`` to 1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m = int(n)
    t = 0.0
    collisions = 0
    merges = [] if record_merges else None
    draw = measure.draw
    expo = rng.standard_exponential
    while m > 1:
        t += expo()
        x, eta = draw(rng)
        h = _heads(rng, m, x, eta)
        if h >= 2:
            m -= h - 1
            collisions += 1
            if merges is not None:
                merges.append(h - 1)
    return CoalescentSummary(int(n), collisions, t, merges)


def simulate_coalescent_chain(table, n, rng):
    """Embedded jump chain with exponential holding times, from a :class:`RateTable`."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > table.n_max:
        raise ValueError(f"n={n} exceeds the rate table n_max={table.n_max}")
    m = int(n)
    t = 0.0
    collisions = 0
    log_g = table.log_g
    cum = table.cum_jump
    while m > 1:
        t += rng.standard_exponential() * math.exp(-log_g[m])
        m = int(np.searchsorted(cum[m], rng.random(), side="right")) + 1
        collisions += 1
    return CoalescentSummary(int(n), collisions, t)


def simulate_coupled(measure, n, rng, trace=False):
    """Coupled coalescent and annihilator driven by the same epochs.

    Primary particles are the initial ones; every epoch with at least one
    head replaces all heads by a single secondary particle.  The annihilator
    is the primary count.  After the last primary particle dies the run
    continues on the surviving secondaries until one particle is left.
    """
    if n < 2:
        raise ValueError(f"coupled sampler needs n >= 2, got {n}")
    r = int(n)  # primary
    s = 0  # secondary
    t = 0.0
    x_before = x_after = 0
    k_n = k_n1 = k_n0 = 0
    composition = []
    path = [] if trace else None
    draw = measure.draw
    expo = rng.standard_exponential

    while r > 0:
        t += expo()
        x, eta = draw(rng)
        hp = _heads(rng, r, x, eta)
        hs = _heads(rng, s, x, eta)
        k = hp + hs
        if hp:
            k_n += 1
            composition.append(hp)
            if hp == 1:
                k_n1 += 1
        else:
            k_n0 += 1
        if k:
            r -= hp
            s += 1 - hs
            if k >= 2:
                x_before += 1
        if path is not None:
            path.append((r, s))
    sigma = t
    u_n = s

    while s > 1:
        t += expo()
        x, eta = draw(rng)
        h = _heads(rng, s, x, eta)
        if h >= 2:
            s -= h - 1
            x_after += 1
        if path is not None:
            path.append((0, s))

    return CoupledSample(
        n=int(n),
        X_n=x_before + x_after,
        tau_n=t,
        K_n=k_n,
        K_n1=k_n1,
        K_n0=k_n0,
        sigma_n=sigma,
        U_n=u_n,
        X_after=x_after,
        composition=composition,
        trace=path,
    )


def simulate_tagged(measure, n, rng):
    """Time ``Z_n`` until a tagged particle first merges, and the number of
    collisions up to and including that merger."""
    if n < 2:
        raise ValueError(f"tagged sampler needs n >= 2, got {n}")
    others = int(n) - 1
    t = 0.0
    collisions = 0
    draw = measure.draw
    expo = rng.standard_exponential
    while True:
        t += expo()
        x, eta = draw(rng)
        tagged = rng.random() < x
        h = _heads(rng, others, x, eta)
        if tagged and h >= 1:
            return t, collisions + 1
        if h >= 2:
            others -= h - 1
            collisions += 1


# ---------------------------------------------------------------------------
# Monte Carlo driver
# ---------------------------------------------------------------------------

SAMPLERS = ("epochs", "chain", "coupled", "tagged")


@dataclass(frozen=True)
class SamplerJob:
    sampler: str
    measure: object
    n: int

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}; expected one of {', '.join(SAMPLERS)}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if self.sampler in ("coupled", "tagged") and self.n < 2:
            raise ConfigError(f"the {self.sampler} sampler needs n >= 2")

    def run_one(self, rng, replicate):
        n = int(self.n)
        row = dict.fromkeys(COLUMNS)
        row["replicate"] = replicate
        row["n"] = n
        if self.sampler == "epochs":
            res = simulate_coalescent_epochs(self.measure, n, rng)
            row["X"], row["tau"] = res.collisions, res.absorption_time
        elif self.sampler == "chain":
            res = simulate_coalescent_chain(cached_table(self.measure, n), n, rng)
            row["X"], row["tau"] = res.collisions, res.absorption_time
        elif self.sampler == "coupled":
            res = simulate_coupled(self.measure, n, rng)
            row.update(
                X=res.X_n, tau=res.tau_n, K=res.K_n, K1=res.K_n1, K0=res.K_n0,
                sigma=res.sigma_n, U=res.U_n, X_after=res.X_after,
            )
        else:
            z, g = simulate_tagged(self.measure, n, rng)
            row["Z"], row["G"] = z, g
        return tuple(row[c] for c in COLUMNS)


def _run_chunk(job, seed, start, stop):
    return [job.run_one(stream(seed, i), i) for i in range(start, stop)]


class SampleTable:
    """Rows keyed by replicate index, columns as in :data:`COLUMNS`."""

    def __init__(self, rows):
        self.rows = sorted(rows, key=lambda r: r[0])

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        j = COLUMNS.index(name)
        values = [r[j] for r in self.rows]
        if any(v is None for v in values):
            raise KeyError(f"column {name!r} is not populated")
        return np.asarray(values)

    def to_csv(self):
        lines = [",".join(COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self):
        records = [dict(zip(COLUMNS, (_json_value(v) for v in row))) for row in self.rows]
        return json.dumps({"columns": list(COLUMNS), "rows": records}, separators=(",", ":")) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        return float(format(v, ".17g"))
    return v


def monte_carlo(job: SamplerJob, replicates, seed=0, workers=1):
    """Run ``job`` ``replicates`` times; replicate ``i`` uses ``stream(seed, i)``.

    The result does not depend on ``workers``.
    """
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ConfigError(f"replicates must be a positive integer, got {replicates!r}")
    workers = max(1, int(workers))
    if workers == 1 or replicates < 2:
        return SampleTable(_run_chunk(job, seed, 0, replicates))
    n_chunks = min(replicates, 4 * workers)
    bounds = np.linspace(0, replicates, n_chunks + 1).astype(int)
    rows = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_chunk, job, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a
        ]
        for fut in futures:
            rows.extend(fut.result())
    return SampleTable(rows)


def default_workers():
    env = os.environ.get("LAMBDACOAL_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"LAMBDACOAL_WORKERS must be an integer, got {env!r}") from exc
    return 1
