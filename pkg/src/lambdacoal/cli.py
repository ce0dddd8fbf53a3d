"""Command-line front end.

Exit status: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure (quadrature or root finding).
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys

from . import __version__
from .errors import ConfigError, NumericalError
from .measure import parse_measure
from .oracle import exact_expected_times, exact_x_distribution
from .rates import N_MAX_DEFAULT, RateTable
from .simulate import SamplerJob, default_workers, derive_seed, monte_carlo
from .verify import CLAIMS, run_verification

DEFAULT_SEED = 0


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _count(text):
    """Positive integer; accepts ``1e8``-style literals when they are integral."""
    try:
        value = int(text)
    except ValueError:
        try:
            f = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if not f.is_integer():
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        value = int(f)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text!r}")
    return value


def _seed(text):
    if text == "random":
        return "random"
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="lambdacoal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", default="uniform", help="uniform | beta:<theta>,<b> | logpareto:<alpha> | loglogpareto | tabulated:<csv>")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", default=None, help="output path (default: $LAMBDACOAL_OUTPUT or stdout)")

    sizes = argparse.ArgumentParser(add_help=False)
    sizes.add_argument("--n", type=_count, nargs="+", required=True, help="initial particle count(s)")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--replicates", type=_count, default=1000)
    mc.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    mc.add_argument("--workers", type=_count, default=None, help="worker processes (default: $LAMBDACOAL_WORKERS or 1)")

    p = sub.add_parser("rates", parents=[common, sizes], help="jump rates g_{n,m}, jump law and total rates")
    p.add_argument("--n-max", type=_count, default=N_MAX_DEFAULT)

    p = sub.add_parser("exact", parents=[common, sizes], help="exact law of X_n and mean absorption time")
    p.add_argument("--n-max", type=_count, default=N_MAX_DEFAULT)

    p = sub.add_parser("simulate", parents=[common, sizes, mc], help="sample (X_n, tau_n)")
    p.add_argument("--engine", choices=("epochs", "chain"), default="epochs")
    p.add_argument("--n-max", type=_count, default=N_MAX_DEFAULT)

    sub.add_parser("coupled", parents=[common, sizes, mc], help="sample the coupled coalescent/annihilator")
    sub.add_parser("tagged", parents=[common, sizes, mc], help="sample external branch length and collision count")

    p = sub.add_parser("verify", parents=[mc], help="run the acceptance suite")
    p.set_defaults(format="json")
    p.add_argument("--format", choices=("json",), default="json")
    p.add_argument("--output", default=None)
    p.add_argument("--claims", type=int, nargs="+", default=None, choices=sorted(CLAIMS))
    return parser


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _rates(args, measure):
    top = max(args.n)
    if top > args.n_max:
        raise ConfigError(f"n={top} exceeds --n-max={args.n_max}")
    if top < 2:
        raise ConfigError("rates need n >= 2")
    table = RateTable.build(measure, top)
    jumps = []
    totals = []
    for n in range(2, top + 1):
        for m in range(1, n):
            jumps.append((n, m, table.g_nm(n, m), float(table.jump[n][m - 1])))
        totals.append((n, table.g(n)))
    if args.format == "json":
        payload = {
            "measure": measure.to_spec(),
            "g_nm": [dict(n=n, m=m, g_nm=g, p_nm=p) for n, m, g, p in jumps],
            "g_n": [dict(n=n, g_n=g) for n, g in totals],
        }
        return json.dumps(payload, indent=1) + "\n"
    lines = ["n,m,g_nm,p_nm"]
    lines += [",".join(_fmt(v) for v in row) for row in jumps]
    lines += ["", "n,g_n"]
    lines += [",".join(_fmt(v) for v in row) for row in totals]
    return "\n".join(lines) + "\n"


def _exact(args, measure):
    top = max(args.n)
    if top > args.n_max:
        raise ConfigError(f"n={top} exceeds --n-max={args.n_max}")
    table = RateTable.build(measure, top)
    times = exact_expected_times(table, top)
    blocks = []
    payload = []
    for n in args.n:
        dist = exact_x_distribution(table, n)
        e_tau = float(times[n])
        if args.format == "json":
            payload.append(
                dict(n=n, mean=dist.mean, var=dist.variance, E_tau=e_tau,
                     pmf=[dict(j=int(j), probability=float(p)) for j, p in zip(dist.support, dist.pmf)])
            )
            continue
        lines = [f"# n={n}, mean={_fmt(dist.mean)}, var={_fmt(dist.variance)}, E_tau={_fmt(e_tau)}", "j,probability"]
        lines += [f"{int(j)},{_fmt(float(p))}" for j, p in zip(dist.support, dist.pmf)]
        blocks.append("\n".join(lines))
    if args.format == "json":
        return json.dumps({"measure": measure.to_spec(), "distributions": payload}, indent=1) + "\n"
    return "\n\n".join(blocks) + "\n"


def _sample(args, measure, sampler):
    if sampler == "chain":
        for n in args.n:
            if n > args.n_max:
                raise ConfigError(f"chain engine needs n <= --n-max={args.n_max}, got n={n}")
    tables = []
    for n in args.n:
        job = SamplerJob(sampler, measure, n)
        tables.append(monte_carlo(job, args.replicates, derive_seed(args.seed, n), args.workers))
    if args.format == "json":
        rows = []
        for t in tables:
            rows.extend(json.loads(t.to_json())["rows"])
        from .simulate import COLUMNS

        return json.dumps({"columns": list(COLUMNS), "rows": rows}, separators=(",", ":")) + "\n"
    text = tables[0].to_csv()
    for t in tables[1:]:
        text += t.to_csv().split("\n", 1)[1]
    return text


def _emit(text, output):
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(output, "w", newline="\n") as fh:
        fh.write(text)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = default_workers()
        if getattr(args, "seed", None) == "random":
            args.seed = secrets.randbits(64)
            print(f"seed={args.seed}", file=sys.stderr)
        output = args.output if args.output is not None else os.environ.get("LAMBDACOAL_OUTPUT") or None

        if args.command == "verify":
            report = run_verification(args.seed, args.workers, args.claims, log=lambda s: print(s, file=sys.stderr))
            _emit(report.to_json(), output)
            return 0 if report.passed else 1

        measure = parse_measure(args.measure)
        if args.command == "rates":
            text = _rates(args, measure)
        elif args.command == "exact":
            text = _exact(args, measure)
        elif args.command == "simulate":
            text = _sample(args, measure, args.engine)
        else:
            text = _sample(args, measure, args.command)
        _emit(text, output)
        return 0
    except ConfigError as exc:
        print(f"lambdacoal: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"lambdacoal: numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
