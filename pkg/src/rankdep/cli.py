"""Command line interface: test, simulate, selftest.

Exit codes: 0 success, 1 selftest failure, 2 data problem (unparseable file,
ties under the reject policy, sample too small), 3 configuration problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .aggregate import statistic_from_name
from .calibrate import ASYMPTOTIC, MonteCarlo, run_test
from .errors import (
    ConfigError,
    LengthMismatch,
    ParseError,
    RankdepError,
    SampleTooSmall,
    TiesPresent,
)
from .ranks import REJECT, JitterWithSeed, compute_ranks
from .selftest import format_report, run_selftest
from .simgen import PEARSON, SimScenario, run_experiment, write_experiment_csv

REPORT_SCHEMA = 1


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through ConfigError
    # so that configuration problems consistently exit 3
    def error(self, message):
        raise ConfigError(message)


def read_csv_matrix(path: str) -> np.ndarray:
    """Parse a CSV of samples-by-variables; first row may be a header."""
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    rows = [r for r in rows if r and not all(c.strip() == "" for c in r)]
    if not rows:
        raise ParseError(f"{path} is empty")

    def parse_row(cells, rownum):
        out = []
        for j, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r}", row=rownum, column=j + 1) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cell!r}", row=rownum, column=j + 1)
            out.append(v)
        return out

    start = 0
    try:
        first = parse_row(rows[0], 1)
    except ParseError:
        start = 1  # header row
    data = []
    width = None
    for i in range(start, len(rows)):
        if width is not None and len(rows[i]) != width:
            raise ParseError(f"expected {width} columns, found {len(rows[i])}", row=i + 1)
        width = len(rows[i])
        data.append(parse_row(rows[i], i + 1) if (i != 0 or start == 1) else first)
    if len(data) < 2 or width is None or width < 2:
        raise ParseError(f"{path}: need at least 2 data rows and 2 columns")
    return np.array(data, dtype=np.float64)


def _default_seed() -> int:
    env = os.environ.get("RANKDEP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"RANKDEP_SEED must be an integer, got {env!r}") from None
    return 0


def _split_stats(spec: str) -> list[str]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if not names:
        raise ConfigError("no statistics requested")
    return names


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as f:
            f.write(text)


def cmd_test(args) -> int:
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    seed = args.seed if args.seed is not None else _default_seed()
    data = read_csv_matrix(args.data)
    try:
        policy = JitterWithSeed(seed) if args.ties == "jitter" else REJECT
        ranks = compute_ranks(data, policy)
    except ValueError as e:
        raise ParseError(str(e)) from e
    stats = [statistic_from_name(s) for s in _split_stats(args.stats)]
    if args.method == "montecarlo":
        if args.reps < 1:
            raise ConfigError(f"--reps must be >= 1, got {args.reps}")
        method = MonteCarlo(reps=args.reps, seed=seed)
    else:
        method = ASYMPTOTIC
    results = [
        run_test(ranks, sid, alpha=args.alpha, method=method, threads=args.threads)
        for sid in stats
    ]
    report = {"schema": REPORT_SCHEMA, "results": [r.to_dict() for r in results]}
    if args.method == "asymptotic" and ranks.n < 32:
        report["note"] = (
            f"n = {ranks.n} is small; asymptotic calibration is rough below n = 32, "
            "consider --method montecarlo"
        )
    if args.format == "json":
        _write_out(json.dumps(report, indent=2) + "\n", args.out)
    else:
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "raw", "rescaled", "p_value", "reject", "n", "m", "method", "seed"])
        for r in results:
            d = r.to_dict()
            w.writerow(
                [
                    d["statistic"],
                    repr(d["raw"]),
                    repr(d["rescaled"]),
                    repr(d["p_value"]),
                    str(d["reject"]).lower(),
                    d["n"],
                    d["m"],
                    d["method"],
                    "" if d["seed"] is None else d["seed"],
                ]
            )
        _write_out(buf.getvalue(), args.out)
    return 0


def cmd_simulate(args) -> int:
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    seed = args.seed if args.seed is not None else _default_seed()
    scenario = SimScenario(
        family=args.family,
        n=args.n,
        m=args.m,
        scatter=args.scatter,
        signal=args.signal,
        seed=seed,
        df=args.df,
        contam_fraction=args.contam_fraction,
    )
    names = _split_stats(args.stats)
    stats = [name if name == PEARSON else statistic_from_name(name) for name in names]
    if args.method == "montecarlo":
        method = MonteCarlo(reps=args.mc_reps, seed=seed)
    else:
        method = ASYMPTOTIC
    rows = run_experiment(
        scenario, stats, reps=args.reps, alpha=args.alpha, method=method, threads=args.threads
    )
    import io

    buf = io.StringIO()
    write_experiment_csv(rows, buf)
    _write_out(buf.getvalue(), args.out)
    return 0


def cmd_selftest(args) -> int:
    checks = run_selftest(args.constants)
    print(format_report(checks))
    return 0 if all(c.ok for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rankdep", description="Rank-based tests of mutual independence")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run independence tests on a CSV data matrix")
    t.add_argument("data", help="CSV file, rows are samples, columns are variables")
    t.add_argument("--stats", default="s_tau", help="comma-separated statistic names")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--method", choices=["asymptotic", "montecarlo"], default="asymptotic")
    t.add_argument("--reps", type=int, default=999, help="Monte Carlo replicates")
    t.add_argument("--seed", type=int, default=None, help="default: $RANKDEP_SEED or 0")
    t.add_argument("--ties", choices=["reject", "jitter"], default="reject")
    t.add_argument("--threads", type=int, default=1)
    t.add_argument("--format", choices=["json", "csv"], default="json")
    t.add_argument("--out", default=None, help="output file (default stdout)")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="estimate size/power over simulated datasets")
    s.add_argument("--family", choices=["mvn", "mvt", "iid-null", "contaminated-mvn"], required=True)
    s.add_argument("-n", "--n", type=int, required=True)
    s.add_argument("-m", "--m", type=int, required=True)
    s.add_argument("--scatter", choices=["identity", "equicorrelation", "pentadiagonal"], default="identity")
    s.add_argument("--signal", type=float, default=0.0)
    s.add_argument("--reps", type=int, required=True, help="scenario replicates")
    s.add_argument("--stats", default="s_tau", help="statistic names, may include s_pearson")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--method", choices=["asymptotic", "montecarlo"], default="asymptotic")
    s.add_argument("--mc-reps", type=int, default=999)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--df", type=int, default=5, help="degrees of freedom for mvt")
    s.add_argument("--contam-fraction", type=float, default=0.05)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    st = sub.add_parser("selftest", help="verify constants and internal oracles")
    st.add_argument("--constants", default=None, help="path to a constants file to check")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ParseError, TiesPresent, SampleTooSmall, LengthMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RankdepError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
