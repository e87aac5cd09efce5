"""Command-line surface: `test`, `simulate`, and `null-table`.

Exit code 0 means the computation succeeded (a rejection is not an
error); nonzero means an operational failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .data import load_csv, quadratic_expand, standardize
from .families import resolve_family
from .nulldist import CvmBmLaw
from .runner import Config, run_test
from .simulate import Scenario, mc_experiment, write_results_csv

_METHOD_FLAGS = {"tcvm-c": "tcvm_c", "tcvm-cf": "tcvm_cf", "hybrid-cf": "hybrid_cf"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uhdgof",
        description="Goodness-of-fit tests for sparse (generalized) linear models with p >> n",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run a goodness-of-fit test on a CSV dataset")
    t.add_argument("--data", required=True, help="CSV file with a header row")
    t.add_argument("--response", required=True, help="response column name")
    t.add_argument("--family", required=True, choices=["gaussian", "binomial"])
    t.add_argument("--method", required=True, choices=sorted(_METHOD_FLAGS))
    t.add_argument("--expand", choices=["quadratic"], help="feature expansion before testing")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--level", type=float, default=0.05)
    t.add_argument("--json", dest="json_out", help="write the full report as JSON here")

    s = sub.add_parser("simulate", help="Monte Carlo size/power experiment")
    s.add_argument("--study", type=int, required=True, choices=[1, 2])
    s.add_argument("--model", required=True, choices=["H11", "H12", "H13", "H21", "H22"])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--a", type=float, default=0.0)
    s.add_argument("--method", required=True, choices=sorted(_METHOD_FLAGS))
    s.add_argument("--reps", type=int, default=200)
    s.add_argument("--level", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="CSV file for the result row")
    s.add_argument("--checkpoint", help="partial-results CSV, refreshed every 25 reps")

    q = sub.add_parser("null-table", help="persist the null-law quantile table")
    q.add_argument("--out", required=True)
    return parser


def _cmd_test(args) -> int:
    family = resolve_family(args.family)
    data = load_csv(args.data, args.response, family)
    data = standardize(data)
    if args.expand == "quadratic":
        data = quadratic_expand(data)
    cfg = Config(method=_METHOD_FLAGS[args.method], family=family,
                 seed=args.seed, level=args.level)
    report = run_test(data, cfg)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(report.to_json(indent=2) + "\n")
    verdict = "reject" if report.reject else "fail to reject"
    print(f"method            : {args.method}")
    print(f"n x p             : {data.n} x {data.p}")
    print(f"combined statistic: {report.statistic:.6g}")
    print(f"combined p-value  : {report.pvalue:.6g}")
    print(f"decision at {args.level:g}  : {verdict}")
    print(f"directions (d1,d2): {report.d_hat_1}, {report.d_hat_2}")
    if report.dropped_projections:
        print(f"dropped projections: {report.dropped_projections}")
    for note in report.notes:
        print(f"note: {note}")
    return 0


def _cmd_simulate(args) -> int:
    scenario = Scenario(study=args.study, model=args.model, a=args.a,
                        n=args.n, p=args.p, rho=args.rho, seed=args.seed)
    result = mc_experiment(scenario, _METHOD_FLAGS[args.method], reps=args.reps,
                           level=args.level, seed=args.seed,
                           checkpoint_path=args.checkpoint)
    row = {"model": args.model, "rho": args.rho, "n": args.n, "p": args.p,
           "a": args.a, "method": _METHOD_FLAGS[args.method], "reps": args.reps,
           "rate": result.rejection_rate, "se": result.mc_se}
    write_results_csv(args.out, [row])
    print(f"{args.model} rho={args.rho:g} n={args.n} p={args.p} a={args.a:g} "
          f"{args.method}: rejection rate {result.rejection_rate:.4f} "
          f"(se {result.mc_se:.4f}, excluded {result.n_excluded})")
    return 0


def _cmd_null_table(args) -> int:
    CvmBmLaw().save_table(args.out)
    print(f"wrote quantile table to {args.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "null-table":
            return _cmd_null_table(args)
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
