"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 solver non-convergence (partial
results are still written), 4 theorem-check violation.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .asymptotics import s_sweep
from .domain import build_domain, poincare_constant
from .eigen import first_eigenpair, p2_oracle
from .errors import ConvergenceError
from .dirichlet import solve_dirichlet
from .params import FracParams, SolverConfig
from .serialize import (
    load_domain_spec,
    load_problem,
    save_eigenpair,
    save_grid_function,
    save_json,
    save_sweep_report,
    save_trace_csv,
)
from .verify import SUITES, report_dict, run_suite

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3
EXIT_VIOLATION = 4

_WEIGHTED_TOL = 1e-10


def _add_common(sub: argparse.ArgumentParser, with_params: bool = True) -> None:
    sub.add_argument("--domain", required=True, help="domain spec JSON file")
    if with_params:
        sub.add_argument("--s", type=float, required=True, help="order s in (0,1)")
        sub.add_argument("--p", type=float, required=True, help="exponent p > 1")
    sub.add_argument("--t", type=float, default=4.0, help="truncation factor (default 4)")
    sub.add_argument("--tol", type=float, default=1e-8)
    sub.add_argument("--inner-tol", type=float, default=1e-10)
    sub.add_argument("--max-iter", type=int, default=500)
    sub.add_argument("--max-iter-inner", type=int, default=10000)
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--threads", type=int, default=1)


def _config(args) -> SolverConfig:
    return SolverConfig(
        tol=args.tol,
        inner_tol=args.inner_tol,
        max_iter_outer=args.max_iter,
        max_iter_inner=args.max_iter_inner,
        seed=args.seed,
        threads=args.threads,
    )


def _domain(args):
    return build_domain(load_domain_spec(args.domain), t=args.t)


def cmd_eig(args) -> int:
    dom = _domain(args)
    params = FracParams(s=args.s, p=args.p, t=args.t)
    cfg = _config(args)
    try:
        pair = first_eigenpair(dom, params, cfg)
        code = EXIT_OK
    except ConvergenceError as exc:
        if exc.partial is None:
            raise
        pair = exc.partial
        code = EXIT_NO_CONVERGENCE
        print(f"warning: {exc}", file=sys.stderr)
    save_eigenpair(pair, params, args.out)
    if args.trace:
        save_trace_csv(pair, args.trace)
    print(repr(pair.lam))
    return code


def cmd_solve(args) -> int:
    dom = _domain(args)
    prob, _params = load_problem(args.problem, dom)
    cfg = _config(args)
    try:
        w = solve_dirichlet(prob, cfg)
        code = EXIT_OK
    except ConvergenceError as exc:
        if exc.partial is None:
            raise
        w = exc.partial
        code = EXIT_NO_CONVERGENCE
        print(f"warning: {exc}", file=sys.stderr)
    save_grid_function(w, args.out, binary=args.binary)
    return code


def _parse_s_values(args) -> list[float]:
    if args.s_list:
        values = [float(v) for v in args.s_list.split(",") if v.strip()]
    else:
        lo_s, hi_s, step = (float(v) for v in args.s_range.split(":"))
        if step <= 0 or hi_s < lo_s:
            raise ValueError(f"bad s range {args.s_range!r}")
        count = int(round((hi_s - lo_s) / step)) + 1
        values = [round(lo_s + i * step, 12) for i in range(count)]
    if not values:
        raise ValueError("no s values given")
    return values


def cmd_sweep(args) -> int:
    dom = _domain(args)
    cfg = _config(args)
    s_values = _parse_s_values(args)
    base = min(s_values, key=lambda s: abs(s - args.s_base))
    if abs(base - args.s_base) > 1e-9:
        raise ValueError(f"--s-base {args.s_base} is not among the sweep values")
    report = s_sweep(dom, args.p, s_values, base, cfg)
    if args.inject_lambda:
        idx_str, val_str = args.inject_lambda.split(":")
        row = report.rows[int(idx_str)]
        row.lam = float(val_str)
        row.weighted_lam = (2.5 * dom.diameter_R) ** (row.s * args.p) * row.lam
    paths = save_sweep_report(report, args.out)
    print(f"wrote {paths['csv']} {paths['json']} {paths['plot']}")
    if any(not r.converged for r in report.rows):
        return EXIT_NO_CONVERGENCE
    if report.weighted_violation() > _WEIGHTED_TOL:
        print(
            f"weighted monotonicity violated: {report.weighted_violation():.3e}",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_poincare(args) -> int:
    dom = _domain(args)
    params = FracParams(s=args.s, p=args.p, t=args.t)
    value = poincare_constant(dom, params)
    print(repr(value))
    if args.out:
        save_json({"s": params.s, "p": params.p, "t": params.t, "constant": value}, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    dom = _domain(args)
    params = FracParams(s=args.s, p=args.p, t=args.t)
    cfg = _config(args)
    results = run_suite(args.suite, dom, params, cfg)
    report = report_dict(args.suite, results, params, cfg)
    save_json(report, args.out)
    for check in results:
        status = "pass" if check.passed else "FAIL"
        print(f"{status} {check.name} margin={check.margin!r} {check.detail}")
    return EXIT_OK if report["all_passed"] else EXIT_VIOLATION


def cmd_oracle(args) -> int:
    dom = _domain(args)
    params = FracParams(s=args.s, p=args.p, t=args.t)
    pair = p2_oracle(dom, params)
    save_eigenpair(pair, params, args.out)
    print(repr(pair.lam))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraceig",
        description="Truncated fractional p-Laplacian eigenpairs, Dirichlet solves and checks",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_eig = subs.add_parser("eig", help="first eigenpair")
    _add_common(p_eig)
    p_eig.add_argument("--out", default="eigenpair.json")
    p_eig.add_argument("--trace", default=None, help="optional trace CSV path")
    p_eig.set_defaults(func=cmd_eig)

    p_solve = subs.add_parser("solve", help="Dirichlet solve from a problem file")
    _add_common(p_solve, with_params=False)
    p_solve.add_argument("--problem", required=True)
    p_solve.add_argument("--out", default="solution.json")
    p_solve.add_argument("--binary", action="store_true", help="write binary values")
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = subs.add_parser("sweep", help="eigenvalue sweep across s")
    p_sweep.add_argument("--domain", required=True)
    p_sweep.add_argument("--p", type=float, required=True)
    p_sweep.add_argument("--s-list", default=None, help="comma-separated s values")
    p_sweep.add_argument("--s-range", default=None, help="start:stop:step")
    p_sweep.add_argument("--s-base", type=float, required=True)
    p_sweep.add_argument("--t", type=float, default=4.0)
    p_sweep.add_argument("--tol", type=float, default=1e-8)
    p_sweep.add_argument("--inner-tol", type=float, default=1e-10)
    p_sweep.add_argument("--max-iter", type=int, default=500)
    p_sweep.add_argument("--max-iter-inner", type=int, default=10000)
    p_sweep.add_argument("--seed", type=int, default=42)
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.add_argument("--out", default="sweep")
    p_sweep.add_argument(
        "--inject-lambda",
        default=None,
        metavar="IDX:VALUE",
        help="testing hook: overwrite one lambda before the monotonicity check",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_poin = subs.add_parser("poincare", help="geometric Poincare constant")
    _add_common(p_poin)
    p_poin.add_argument("--out", default=None)
    p_poin.set_defaults(func=cmd_poincare)

    p_verify = subs.add_parser("verify", help="randomized property suites")
    _add_common(p_verify)
    p_verify.add_argument("--suite", required=True, choices=SUITES + ("all",))
    p_verify.add_argument("--out", default="verify.json")
    p_verify.set_defaults(func=cmd_verify)

    p_oracle = subs.add_parser("oracle", help="dense p=2 eigen oracle")
    _add_common(p_oracle)
    p_oracle.add_argument("--out", default="oracle.json")
    p_oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "sweep":
        if (args.s_list is None) == (args.s_range is None):
            parser.error("sweep needs exactly one of --s-list / --s-range")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
