"""Command-line entry point: ``dtest <command> ...``.

Each successful command prints one JSON report on stdout and exits 0.
Failures print ``{"error": {...}}`` on stderr with exit codes

    2  bad parameters or invalid input
    3  rows that match in every column (no test exists)
    4  exact arithmetic beyond the tractability limit
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .core import load_discrete_csv, load_raw_csv, write_discrete_csv
from .discretize import discretize_quantile, discretize_sign
from .errors import DtestError, ParameterError
from .montecarlo import (
    McConfig,
    default_workers,
    mc_matching_test,
    mc_min_test_length_distribution,
    mc_row_match,
)
from .probability import (
    AlphabetProfile,
    prob_matching_test,
    prob_row_match_profile,
    prob_row_match_uniform,
)
from .testing import (
    column_importance,
    enumerate_dead_end_tests,
    find_matching_row_groups,
    pigeonhole_bound,
)

SCHEMA_VERSION = "1.0.0"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _header_flag(args):
    return {"auto": None, "yes": True, "no": False}[args.header]


def _profile(args) -> AlphabetProfile:
    if args.ks is not None:
        if args.m is not None or args.k is not None:
            raise ParameterError("give either --ks or --m/--k, not both")
        return AlphabetProfile(tuple(args.ks), args.n)
    if args.m is None or args.k is None:
        raise ParameterError("profile needs --ks or both --m and --k")
    if args.m < 1:
        raise ParameterError(f"m must be >= 1, got {args.m}")
    return AlphabetProfile.uniform(args.n, args.m, args.k)


def _profile_params(args) -> dict:
    if args.ks is not None:
        return {"n": args.n, "ks": list(args.ks)}
    return {"n": args.n, "m": args.m, "k": args.k}


def cmd_discretize(args):
    if args.method == "quantile" and args.levels < 2:
        raise ParameterError(f"--levels must be >= 2, got {args.levels}", levels=args.levels)
    raw = load_raw_csv(args.input, has_header=_header_flag(args))
    if args.method == "sign":
        disc = discretize_sign(raw)
    else:
        disc = discretize_quantile(raw, args.levels, per_column=args.per_column)
    write_discrete_csv(disc, args.output)
    params = {"input": args.input, "method": args.method, "output": args.output}
    if args.method == "quantile":
        params.update(levels=args.levels, per_column=args.per_column)
    results = {
        "input_shape": list(raw.shape),
        "shape": [disc.n, disc.m],
        "alphabet_sizes": list(disc.alphabet_sizes),
        "row_labels": list(disc.row_labels),
    }
    return params, results


def _load_matrix(args):
    return load_discrete_csv(args.input, args.alphabet_sizes, has_header=_header_flag(args))


def _budgets(args):
    if args.max_count < 1:
        raise ParameterError(f"--max-count must be >= 1, got {args.max_count}")
    if args.time_budget_ms < 1:
        raise ParameterError(f"--time-budget-ms must be >= 1, got {args.time_budget_ms}")
    return args.max_count, args.time_budget_ms / 1000.0


def _importance_rows(report, matrix):
    return [
        {"column": j, "label": matrix.col_labels[j], "count": c, "frequency": f}
        for j, c, f in column_importance(report, matrix.m)
    ]


def cmd_tests(args):
    max_count, budget = _budgets(args)
    matrix = _load_matrix(args)
    report = enumerate_dead_end_tests(matrix, max_count, budget, workers=args.workers)
    params = {"input": args.input, "max_count": max_count, "time_budget_ms": args.time_budget_ms}
    results = {
        "shape": [matrix.n, matrix.m],
        "tests": [list(t) for t in report.tests],
        "test_labels": [[matrix.col_labels[c] for c in t] for t in report.tests],
        "count": len(report.tests),
        "min_length": report.min_length,
        "pigeonhole_bound": pigeonhole_bound(matrix.alphabet_sizes, matrix.n),
        "exhausted": report.exhausted,
        "budget_hit": report.budget_hit,
        "search_elapsed_ms": 0 if args.stable else round(report.elapsed * 1000),
        "importance": _importance_rows(report, matrix),
    }
    return params, results


def cmd_importance(args):
    max_count, budget = _budgets(args)
    matrix = _load_matrix(args)
    report = enumerate_dead_end_tests(matrix, max_count, budget, workers=args.workers)
    params = {"input": args.input, "max_count": max_count, "time_budget_ms": args.time_budget_ms}
    results = {"tests_scored": len(report.tests), "exhausted": report.exhausted, "importance": _importance_rows(report, matrix)}
    return params, results


def _parse_columns(text: str, m: int):
    text = text.strip()
    if text.lower() == "all":
        return list(range(m))
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"--columns must be 'all' or comma-separated indices, got {text!r}")


def cmd_cluster(args):
    matrix = _load_matrix(args)
    cols = _parse_columns(args.columns, matrix.m)
    partition = find_matching_row_groups(matrix, cols)
    whole = len(partition.defining_columns) == matrix.m
    labelled = [[matrix.row_labels[i] for i in c] for c in partition.clusters]
    params = {"input": args.input, "columns": args.columns}
    results = {
        "defining_columns": list(partition.defining_columns),
        "all_columns": whole,
        "clusters": labelled,
        "cluster_indices": partition.clusters,
        "matching_submatrices": [c for c in labelled if len(c) >= 2] if whole else [],
    }
    return params, results


def cmd_prob(args):
    params = dict(_profile_params(args), exact=args.exact)
    if args.which == "rows":
        if args.ks is None and args.m is not None and args.k is not None:
            value = prob_row_match_uniform(args.n, args.m, args.k, exact=args.exact)
            formula = "row-match-uniform"
        else:
            value = prob_row_match_profile(_profile(args), exact=args.exact)
            formula = "row-match-profile"
    else:
        params["l"] = args.l
        value = prob_matching_test(_profile(args), args.l, exact=args.exact)
        formula = "matching-test"
    return params, {"formula": formula, "probability": value.to_dict()}


def cmd_mc(args):
    profile = _profile(args)
    config = McConfig(profile, args.trials, args.seed, args.workers)
    params = dict(_profile_params(args), trials=args.trials, seed=args.seed)
    if args.which == "rows":
        est = mc_row_match(config)
        results = dict(est.to_dict(), closed_form=prob_row_match_profile(profile).to_dict())
    elif args.which == "matching-test":
        params["l"] = args.l
        est = mc_matching_test(config, args.l)
        results = dict(est.to_dict(), closed_form=prob_matching_test(profile, args.l).to_dict())
    else:
        if args.budget_ms < 1:
            raise ParameterError(f"--budget-ms must be >= 1, got {args.budget_ms}")
        params["budget_ms"] = args.budget_ms
        hist = mc_min_test_length_distribution(config, args.budget_ms / 1000.0)
        results = dict(hist.to_dict(), pigeonhole_bound=pigeonhole_bound(profile.sizes, profile.n))
    return params, results


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--stable", action="store_true", help="zero timing fields for reproducible output")

    matrix_in = _Parser(add_help=False)
    matrix_in.add_argument("--input", required=True)
    matrix_in.add_argument("--header", choices=["auto", "yes", "no"], default="auto")

    parser = _Parser(prog="dtest", description="Diagnostic tests for discrete-valued time series.")
    parser.add_argument("--version", action="version", version=f"dtest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("discretize", parents=[common, matrix_in], help="raw series -> symbol matrix")
    p.add_argument("--method", choices=["sign", "quantile"], default="sign")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--per-column", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_discretize)

    search = _Parser(add_help=False)
    search.add_argument("--alphabet-sizes", type=_int_list, default=None)
    search.add_argument("--max-count", type=int, default=100_000)
    search.add_argument("--time-budget-ms", type=int, default=60_000)
    search.add_argument("--workers", type=int, default=default_workers())

    p = sub.add_parser("tests", parents=[common, matrix_in, search], help="enumerate dead-end tests")
    p.set_defaults(func=cmd_tests)
    p = sub.add_parser("importance", parents=[common, matrix_in, search], help="rank columns by dead-end test membership")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("cluster", parents=[common, matrix_in], help="group rows with equal projections")
    p.add_argument("--alphabet-sizes", type=_int_list, default=None)
    p.add_argument("--columns", default="all", help="'all', or comma-separated indices ('' for none)")
    p.set_defaults(func=cmd_cluster)

    profile = _Parser(add_help=False)
    profile.add_argument("--n", type=int, required=True)
    profile.add_argument("--ks", type=_int_list, default=None, help="per-column alphabet sizes, e.g. 2,3,3")
    profile.add_argument("--m", type=int, default=None)
    profile.add_argument("--k", type=int, default=None)

    p = sub.add_parser("prob", help="closed-form probabilities")
    psub = p.add_subparsers(dest="which", required=True, parser_class=_Parser)
    q = psub.add_parser("rows", parents=[common, profile])
    q.add_argument("--exact", action="store_true")
    q.set_defaults(func=cmd_prob)
    q = psub.add_parser("matching-test", parents=[common, profile])
    q.add_argument("--l", type=int, required=True)
    q.add_argument("--exact", action="store_true")
    q.set_defaults(func=cmd_prob)

    p = sub.add_parser("mc", help="Monte Carlo estimates")
    msub = p.add_subparsers(dest="which", required=True, parser_class=_Parser)
    for name in ("rows", "matching-test", "min-length"):
        q = msub.add_parser(name, parents=[common, profile])
        q.add_argument("--trials", type=int, required=True)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--workers", type=int, default=default_workers())
        if name == "matching-test":
            q.add_argument("--l", type=int, required=True)
        if name == "min-length":
            q.add_argument("--budget-ms", type=int, default=10_000)
        q.set_defaults(func=cmd_mc)
    return parser


def _command_name(args) -> str:
    which = getattr(args, "which", None)
    return f"{args.command} {which}" if which else args.command


def _fail(err: DtestError) -> int:
    sys.stderr.write(json.dumps({"error": err.to_dict()}, sort_keys=True) + "\n")
    return err.exit_code


def main(argv=None) -> int:
    start = time.monotonic()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise ParameterError(f"--workers must be >= 1, got {args.workers}")
        params, results = args.func(args)
    except DtestError as err:
        return _fail(err)
    except OSError as err:
        return _fail(ParameterError(f"{err.filename}: {err.strerror}"))
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": _command_name(args),
        "parameters": params,
        "results": results,
        "elapsed_ms": 0 if args.stable else round((time.monotonic() - start) * 1000),
        "tool_version": __version__,
    }
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
