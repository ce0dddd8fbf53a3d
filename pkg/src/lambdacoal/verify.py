"""Statistical verification suite.

Each claim builds its own fixtures, draws from streams derived from the run
seed and the claim number, and returns one or more :class:`ClaimRecord`.
Only records with ``binding=True`` decide the top-level verdict; the others
carry the per-state numbers a binding record summarises.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .limits import (
    DEFAULT_CF_GRID,
    MittagLefflerRef,
    cf_distance,
    classify,
    ks_distance,
    moment_errors,
    norm_constants,
    stable_cf,
    total_variation,
)
from .measure import Beta, LogPareto, Uniform
from .oracle import exact_x_distribution, indicator_distribution
from .rates import RateTable
from .simulate import SamplerJob, derive_seed, monte_carlo, simulate_coupled, stream

H_99 = float(sum(1.0 / k for k in range(1, 100)))


@dataclass
class ClaimRecord:
    claim_id: str
    regime: int | None
    n: int | None
    replicates: int | None
    statistic: float
    threshold: float
    passed: bool
    binding: bool = True
    detail: str = ""

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["statistic"] = _num(self.statistic)
        d["threshold"] = _num(self.threshold)
        return d


def _num(x):
    x = float(x)
    return float(format(x, ".17g")) if math.isfinite(x) else str(x)


@dataclass
class VerificationReport:
    seed: int
    records: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.records if r.binding)

    def claim_passed(self, number):
        prefix = f"C{number:02d}"
        recs = [r for r in self.records if r.claim_id.startswith(prefix) and r.binding]
        return bool(recs) and all(r.passed for r in recs)

    def to_json(self):
        payload = {"seed": self.seed, "pass": self.passed, "claims": [r.to_dict() for r in self.records]}
        return json.dumps(payload, indent=2) + "\n"

    def summary_lines(self):
        lines = []
        for number in sorted({int(r.claim_id[1:3]) for r in self.records}):
            recs = [r for r in self.records if r.claim_id.startswith(f"C{number:02d}") and r.binding]
            verdict = "PASS" if all(r.passed for r in recs) else "FAIL"
            stats_txt = "; ".join(f"{r.claim_id}: {r.statistic:.6g} vs {r.threshold:.6g}" for r in recs)
            secs = self.timings.get(number)
            t = f" [{secs:.1f}s]" if secs is not None else ""
            lines.append(f"{verdict} criterion {number:2d}{t}: {stats_txt}")
        return lines


# ---------------------------------------------------------------------------
# claims
# ---------------------------------------------------------------------------


def claim_rate_identities(seed, workers):
    out = []
    for label, measure in (("uniform", Uniform()), ("beta(2,1)", Beta(2, 1)), ("beta(1,2)", Beta(1, 2))):
        table = RateTable.build(measure, 200)
        rec = table.recursion_error()
        row = table.row_sum_error()
        out.append(ClaimRecord(f"C01-recursion-{label}", 1, 200, None, rec, 1e-10, rec <= 1e-10))
        out.append(ClaimRecord(f"C01-rowsum-{label}", 1, 200, None, row, 1e-10, row <= 1e-10))
    return out


def claim_uniform_jump(seed, workers):
    table = RateTable.build(Uniform(), 200)
    err = max(float(np.max(np.abs(table.jump[n] - 1.0 / (n - 1)))) for n in range(2, 201))
    return [ClaimRecord("C02-uniform-jump", 1, 200, None, err, 1e-12, err <= 1e-12)]


def claim_oracle_equivalence(seed, workers):
    out = []
    for b in (0.5, 1.0, 2.0, 5.0):
        table = RateTable.build(Beta(1, b), 50)
        err = max(
            float(np.max(np.abs(exact_x_distribution(table, n).pmf - indicator_distribution(b, n).pmf)))
            for n in range(2, 51)
        )
        out.append(ClaimRecord(f"C03-indicator-b={b:g}", 1, 50, None, err, 1e-10, err <= 1e-10))
    return out


def claim_mc_vs_oracle(seed, workers):
    n, reps = 100, 100_000
    x = monte_carlo(SamplerJob("epochs", Uniform(), n), reps, derive_seed(seed, 4), workers).column("X")
    se = float(x.std(ddof=1)) / math.sqrt(reps)
    z = abs(float(x.mean()) - H_99) / se
    exact = exact_x_distribution(RateTable.build(Uniform(), n), n)
    tv = total_variation(x, exact.pmf, exact.support)
    return [
        ClaimRecord("C04-mean-z", 1, n, reps, z, 3.0, z <= 3.0, detail=f"mean={x.mean():.6f}, H_99={H_99:.6f}"),
        ClaimRecord("C04-tv", 1, n, reps, tv, 0.01, tv <= 0.01),
    ]


def claim_sampler_equivalence(seed, workers):
    reps = 100_000
    out = []
    pvals = {"X": [], "tau": []}
    for i, n in enumerate((10, 50, 200)):
        epochs = monte_carlo(SamplerJob("epochs", Uniform(), n), reps, derive_seed(seed, 5, i, 0), workers)
        chain = monte_carlo(SamplerJob("chain", Uniform(), n), reps, derive_seed(seed, 5, i, 1), workers)
        for col in ("X", "tau"):
            p = float(stats.ks_2samp(epochs.column(col), chain.column(col)).pvalue)
            pvals[col].append(p)
            out.append(ClaimRecord(f"C05-ks-{col}-n={n}", 1, n, reps, p, 0.01, p >= 0.01, binding=False))
    for col, ps in pvals.items():
        ok = sum(p >= 0.01 for p in ps)
        out.append(ClaimRecord(f"C05-states-passing-{col}", 1, None, reps, ok, 2, ok >= 2))
    return out


def claim_coupling_bounds(seed, workers):
    n, reps = 1000, 10_000
    out = []
    for j, (label, measure) in enumerate((("uniform", Uniform()), ("beta(2,1)", Beta(2, 1)), ("logpareto(0.5)", LogPareto(0.5)))):
        key = derive_seed(seed, 6, j)
        bad = 0
        for i in range(reps):
            sample = simulate_coupled(measure, n, stream(key, i), trace=True)
            if sample.check():
                bad += 1
        out.append(ClaimRecord(f"C06-pathwise-{label}", None, n, reps, bad / reps, 0.0, bad == 0))
    return out


def claim_regime1_normality(seed, workers):
    reps = 10_000
    measure = Uniform()
    spec = classify(measure)
    dists = []
    out = []
    for i, n in enumerate((10**4, 10**6, 10**8)):
        x = monte_carlo(SamplerJob("epochs", measure, n), reps, derive_seed(seed, 7, i), workers).column("X")
        a, b = norm_constants(spec, n)
        d = ks_distance((x - b) / a, stats.norm.cdf)
        dists.append(d)
        out.append(ClaimRecord(f"C07-ks-n=1e{round(math.log10(n))}", 1, n, reps, d, 0.10, d <= 0.10, binding=False))
    steps = max(dists[1] - dists[0], dists[2] - dists[1])
    out.append(ClaimRecord("C07-nonincreasing", 1, None, reps, steps, 0.0, steps <= 0.0))
    out.append(ClaimRecord("C07-ks-final", 1, 10**8, reps, dists[-1], 0.10, dists[-1] <= 0.10))
    return out


def claim_tau_variance(seed, workers):
    n, reps = 10**8, 10_000
    tau = monte_carlo(SamplerJob("epochs", Uniform(), n), reps, derive_seed(seed, 8), workers).column("tau")
    ratio = float(np.var(tau, ddof=1)) / math.log(n)
    ok = 1.6 <= ratio <= 2.4
    return [ClaimRecord("C08-var-tau-over-log-n", 1, n, reps, ratio, 2.4, ok, detail="accepted range [1.6, 2.4], target 2")]


def claim_mittag_leffler(seed, workers):
    reps = 10_000
    measure = LogPareto(0.5)
    spec = classify(measure)
    ref = MittagLefflerRef(0.5)
    errs = {}
    out = []
    for i, n in enumerate((10**4, 10**8)):
        x = monte_carlo(SamplerJob("epochs", measure, n), reps, derive_seed(seed, 9, i), workers).column("X")
        a, _ = norm_constants(spec, n)
        errs[n] = moment_errors(x / a, ref, 4)
        for k, e in enumerate(errs[n], start=1):
            binding = n == 10**8 and k <= 2
            out.append(
                ClaimRecord(f"C09-moment{k}-n=1e{round(math.log10(n))}", 5, n, reps, e, 0.15, e <= 0.15, binding=binding)
            )
    trend = errs[10**8][0] - errs[10**4][0]
    out.append(ClaimRecord("C09-moment1-nonincreasing", 5, None, reps, trend, 0.0, trend <= 0.0))
    return out


def claim_stable(seed, workers):
    reps = 10_000
    measure = LogPareto(1.5)
    spec = classify(measure)
    dist = {}
    for i, n in enumerate((10**4, 10**8)):
        x = monte_carlo(SamplerJob("epochs", measure, n), reps, derive_seed(seed, 10, i), workers).column("X")
        a, b = norm_constants(spec, n)
        dist[n] = cf_distance((x - b) / a, lambda t: stable_cf(1.5, t), DEFAULT_CF_GRID)
    d4, d8 = dist[10**4], dist[10**8]
    return [
        ClaimRecord("C10-cf-n=1e4", 3, 10**4, reps, d4, 0.15, d4 <= 0.15, binding=False),
        ClaimRecord("C10-cf-n=1e8", 3, 10**8, reps, d8, 0.15, d8 <= 0.15),
        ClaimRecord("C10-cf-nonincreasing", 3, None, reps, d8 - d4, 0.0, d8 <= d4),
    ]


def claim_external_branch(seed, workers):
    n, reps = 10**6, 10_000
    measure = Uniform()
    p = measure.mean_x()
    table = monte_carlo(SamplerJob("tagged", measure, n), reps, derive_seed(seed, 11), workers)
    z = table.column("Z")
    g = table.column("G")
    ks = ks_distance(z, lambda t: stats.expon.cdf(t, scale=1.0 / p))
    support = np.arange(1, 31)
    tv = total_variation(g, p * (1 - p) ** (support - 1), support)
    return [
        ClaimRecord("C11-ks-Z-exponential", None, n, reps, ks, 0.05, ks <= 0.05),
        ClaimRecord("C11-tv-G-geometric", None, n, reps, tv, 0.05, tv <= 0.05),
    ]


def claim_determinism(seed, workers):
    job = SamplerJob("coupled", Uniform(), 50)
    key = derive_seed(seed, 12)
    one = monte_carlo(job, 400, key, 1).to_csv()
    many = monte_carlo(job, 400, key, max(2, workers)).to_csv()
    same = one == many
    return [ClaimRecord("C12-workers-byte-identical", None, 50, 400, 0.0 if same else 1.0, 0.0, same)]


CLAIMS = {
    1: claim_rate_identities,
    2: claim_uniform_jump,
    3: claim_oracle_equivalence,
    4: claim_mc_vs_oracle,
    5: claim_sampler_equivalence,
    6: claim_coupling_bounds,
    7: claim_regime1_normality,
    8: claim_tau_variance,
    9: claim_mittag_leffler,
    10: claim_stable,
    11: claim_external_branch,
    12: claim_determinism,
}

#: wall-clock budgets in seconds
BUDGETS = {1: 10, 2: 1, 3: 10, 4: 30, 5: 120, 6: 120, 7: 300, 8: 300, 9: 300, 10: 300, 11: 120, 12: 60}


def run_verification(seed=0, workers=1, claims=None, log=None):
    """Run the selected claims (all by default) and collect a report."""
    report = VerificationReport(seed=int(seed))
    for number in sorted(claims or CLAIMS):
        if number not in CLAIMS:
            raise ValueError(f"unknown claim {number}")
        start = time.perf_counter()
        records = CLAIMS[number](seed, workers)
        report.timings[number] = time.perf_counter() - start
        report.records.extend(records)
        if log is not None:
            log(report.summary_lines()[-1] if report.records else "")
    return report
