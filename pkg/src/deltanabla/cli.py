"""Command-line front end.

Commands: solve (run the solver on a problem file), verify (built-in
example end-to-end, or randomized identity checks), residual (evaluate
stationarity residuals for a candidate y), eval and diff (expression
utilities).  Output modes: table (default), csv, structured (JSON).
Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from .expressions import EvaluationError, ParseError, evaluate, make_lagrangian, to_str
from .functional import (
    EL1,
    EL2,
    eval_functional,
    el_residual,
    iso_residual,
)
from .oracle import identity_fuzz, verify_example
from .problemfile import LoadedProblem, ProblemFileError, emit_problem, load_problem
from .solver import SolveResult, find_abnormal, solve_normal
from .timescale import GridFunction, delta_derivative, nabla_derivative

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _structured(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def _point_rows(y: GridFunction, r1: np.ndarray, r2: np.ndarray) -> list[dict]:
    """Per-point table: t, y, both difference quotients on their genuine
    windows, and the residuals on theirs; None marks undefined cells."""
    t = y.scale.points
    n = len(t)
    yd = delta_derivative(y).values
    yn = nabla_derivative(y).values
    rows = []
    for i in range(n):
        rows.append(
            {
                "t": float(t[i]),
                "y": float(y.values[i]),
                "y_delta": float(yd[i]) if i < n - 1 else None,
                "y_nabla": float(yn[i]) if i > 0 else None,
                "residual_EL1": float(r1[i - 1]) if i > 0 else None,
                "residual_EL2": float(r2[i]) if i < n - 1 else None,
            }
        )
    return rows


_CSV_COLUMNS = ("t", "y", "y_delta", "y_nabla", "residual_EL1", "residual_EL2")


def _emit_csv(rows: list[dict]) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            ["" if row[c] is None else repr(row[c]) for c in _CSV_COLUMNS]
        )


def _print_rows(rows: list[dict]) -> None:
    header = ["t", "y", "y_delta", "y_nabla", "residual_EL1", "residual_EL2"]
    table = [header]
    for row in rows:
        table.append(
            ["-" if row[c] is None else _fmt(row[c]) for c in header]
        )
    widths = [max(len(line[i]) for line in table) for i in range(len(header))]
    for line in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())


def _result_payload(result: SolveResult, k: float) -> dict:
    return {
        "converged": result.converged,
        "iterations": result.iterations,
        "classification": result.classification,
        "lambda0": result.lam0,
        "lambda": result.lam,
        "objective": dataclasses.asdict(result.objective_value),
        "constraint": {
            **dataclasses.asdict(result.constraint_value),
            "k": k,
            "gap": abs(result.constraint_value.product - k),
        },
        "el_defect": result.el_defect,
        "kkt_residual_norm": result.kkt_residual_norm,
        "message": result.message,
        "y": [float(v) for v in result.y.values],
        "points": [float(t) for t in result.y.scale.points],
        "stationary_points": [
            {
                "values": [float(v) for v in sp.values],
                "lambda": sp.lam,
                "objective_product": sp.objective_product,
            }
            for sp in result.stationary_points
        ],
    }


def _solve_row_data(loaded: LoadedProblem, result: SolveResult):
    p = loaded.problem
    if result.converged:
        r1 = iso_residual(
            p.objective, p.constraint, result.y, result.lam0, result.lam, EL1
        ).residual.values
        r2 = iso_residual(
            p.objective, p.constraint, result.y, result.lam0, result.lam, EL2
        ).residual.values
    else:
        r1 = el_residual(p.objective, result.y, EL1).residual.values
        r2 = el_residual(p.objective, result.y, EL2).residual.values
    return _point_rows(result.y, r1, r2)


def cmd_solve(args: argparse.Namespace) -> int:
    loaded = _load(args)
    if args.emit_problem:
        print(emit_problem(loaded))
        return EXIT_OK
    result = solve_normal(loaded.problem, loaded.options)
    abnormal = find_abnormal(loaded.problem, loaded.options)
    rows = _solve_row_data(loaded, result)

    if args.output == "structured":
        payload = {
            "command": "solve",
            "problem": loaded.document,
            "result": _result_payload(result, loaded.problem.k),
            "abnormal": [
                _result_payload(r, loaded.problem.k) for r in abnormal
            ],
            "rows": rows,
        }
        print(_structured(payload))
    elif args.output == "csv":
        _emit_csv(rows)
    else:
        p = loaded.problem
        print(
            f"scale: {len(p.scale)} points on "
            f"[{_fmt(p.scale.a)}, {_fmt(p.scale.b)}]"
        )
        print(f"converged: {'yes' if result.converged else 'no'} "
              f"({result.iterations} iterations)")
        if result.message:
            print(f"note: {result.message}")
        print(f"classification: {result.classification}")
        print(f"lambda0: {_fmt(result.lam0)}")
        print(f"lambda: {_fmt(result.lam)}")
        obj = result.objective_value
        con = result.constraint_value
        print(
            f"objective: delta {_fmt(obj.delta_factor)} "
            f"nabla {_fmt(obj.nabla_factor)} product {_fmt(obj.product)}"
        )
        print(
            f"constraint: product {_fmt(con.product)} "
            f"(k = {_fmt(p.k)}, gap {_fmt(abs(con.product - p.k))})"
        )
        print(f"bracket defect: {_fmt(result.el_defect)}")
        print(f"kkt residual: {_fmt(result.kkt_residual_norm)}")
        print(f"stationary points found: {len(result.stationary_points)}")
        print(f"abnormal candidates: {len(abnormal)}")
        for i, r in enumerate(abnormal):
            vals = ", ".join(_fmt(v) for v in r.y.values)
            print(f"  abnormal[{i}]: y = ({vals}), defect {_fmt(r.el_defect)}")
        print()
        _print_rows(rows)
    return EXIT_OK if result.converged else EXIT_NUMERIC


def cmd_residual(args: argparse.Namespace) -> int:
    loaded = _load(args)
    if args.emit_problem:
        print(emit_problem(loaded))
        return EXIT_OK
    p = loaded.problem
    try:
        values = np.array([float(x) for x in args.y.split(",")])
    except ValueError:
        print("error: --y expects comma-separated numbers", file=sys.stderr)
        return EXIT_INPUT
    if values.size != len(p.scale):
        print(
            f"error: expected {len(p.scale)} values for this scale, "
            f"got {values.size}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    y = GridFunction(p.scale, values)
    tol = loaded.options.stat_tol

    with_multiplier = args.lam is not None
    if with_multiplier:
        r1 = iso_residual(p.objective, p.constraint, y, args.lam0, args.lam, EL1)
        r2 = iso_residual(p.objective, p.constraint, y, args.lam0, args.lam, EL2)
    else:
        r1 = el_residual(p.objective, y, EL1)
        r2 = el_residual(p.objective, y, EL2)
    con = eval_functional(p.constraint, y)
    gap = abs(con.product - p.k)
    feasible = gap <= loaded.options.feas_tol
    stationary = (
        with_multiplier and r1.defect <= tol and r2.defect <= tol
    )
    rows = _point_rows(y, r1.residual.values, r2.residual.values)

    if args.output == "structured":
        payload = {
            "command": "residual",
            "problem": loaded.document,
            "with_multiplier": with_multiplier,
            "lambda0": args.lam0 if with_multiplier else None,
            "lambda": args.lam,
            "constraint": {
                **dataclasses.asdict(con),
                "k": p.k,
                "gap": gap,
                "feasible": feasible,
            },
            "EL1": {
                "defect": r1.defect,
                "constant_estimate": r1.constant_estimate,
            },
            "EL2": {
                "defect": r2.defect,
                "constant_estimate": r2.constant_estimate,
            },
            "classification": (
                ("stationary" if stationary else "not stationary")
                if with_multiplier
                else None
            ),
            "rows": rows,
        }
        print(_structured(payload))
    elif args.output == "csv":
        _emit_csv(rows)
    else:
        if with_multiplier:
            print(
                f"multipliers: lambda0 {_fmt(args.lam0)} lambda {_fmt(args.lam)}"
            )
        else:
            print("multipliers: none (raw objective residuals)")
        print(
            f"constraint: product {_fmt(con.product)} "
            f"(k = {_fmt(p.k)}, gap {_fmt(gap)})"
        )
        if not feasible:
            print(f"warning: constraint gap {_fmt(gap)} exceeds tol {_fmt(loaded.options.feas_tol)}")
        print(
            f"EL1: defect {_fmt(r1.defect)} "
            f"constant {_fmt(r1.constant_estimate)}"
        )
        print(
            f"EL2: defect {_fmt(r2.defect)} "
            f"constant {_fmt(r2.constant_estimate)}"
        )
        if with_multiplier:
            print(
                "classification: "
                + ("stationary" if stationary else "not stationary")
            )
        print()
        _print_rows(rows)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.what == "example":
        report = verify_example(args.M)
        if args.output == "structured":
            payload = {
                "command": "verify-example",
                "m": report.m,
                "passed": report.passed,
                "lambda_fit": report.lambda_fit,
                "checks": [dataclasses.asdict(c) for c in report.checks],
            }
            print(_structured(payload))
        else:
            print(f"example m={report.m}")
            for c in report.checks:
                tag = "PASS" if c.passed else "FAIL"
                print(
                    f"{tag} {c.name}: measured {_fmt(c.measured)} "
                    f"(bound {_fmt(c.bound)})"
                )
            print(f"lambda_fit: {_fmt(report.lambda_fit)}")
            print(f"result: {'PASS' if report.passed else 'FAIL'}")
        return EXIT_OK if report.passed else EXIT_NUMERIC

    fuzz = identity_fuzz(seed=args.seed, count=args.count)
    if args.output == "structured":
        payload = {
            "command": "verify-identities",
            "seed": fuzz.seed,
            "count": fuzz.count,
            "identities": fuzz.identities,
            "max_rel_error": fuzz.max_rel_error,
            "passed": fuzz.passed,
            "failures": list(fuzz.failures),
        }
        print(_structured(payload))
    else:
        print(
            f"identity fuzz: seed {fuzz.seed}, {fuzz.count} scales, "
            f"{fuzz.identities} identities"
        )
        print(f"max relative error: {_fmt(fuzz.max_rel_error)}")
        for line in fuzz.failures:
            print(f"FAIL {line}")
        print(f"result: {'PASS' if fuzz.passed else 'FAIL'}")
    return EXIT_OK if fuzz.passed else EXIT_NUMERIC


def cmd_eval(args: argparse.Namespace) -> int:
    parts = args.at.split(",")
    if len(parts) != 3:
        print("error: --at expects t,u,v", file=sys.stderr)
        return EXIT_INPUT
    t, u, v = (float(x) for x in parts)
    lag = make_lagrangian(args.expression)
    print(repr(evaluate(lag.value, t, u, v)))
    return EXIT_OK


def cmd_diff(args: argparse.Namespace) -> int:
    lag = make_lagrangian(args.expression)
    print(f"value: {to_str(lag.value)}")
    print(f"d_u: {to_str(lag.d_u)}")
    print(f"d_v: {to_str(lag.d_v)}")
    return EXIT_OK


def _load(args: argparse.Namespace) -> LoadedProblem:
    loaded = load_problem(args.file)
    options = loaded.options
    overrides = {}
    if args.tol is not None:
        if args.tol <= 0:
            raise ProblemFileError("--tol", "must be positive")
        overrides["feas_tol"] = args.tol
        overrides["stat_tol"] = args.tol
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if args.multistart is not None:
        overrides["multistart"] = args.multistart
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.spread is not None:
        overrides["spread"] = args.spread
    if overrides:
        options = dataclasses.replace(options, **overrides)
        document = dict(loaded.document)
        document["options"] = {
            "tol": options.stat_tol,
            "max_iter": options.max_iter,
            "multistart": options.multistart,
            "seed": options.seed,
            "spread": options.spread,
        }
        loaded = LoadedProblem(
            problem=loaded.problem, options=options, document=document
        )
    return loaded


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--tol", type=float, default=None,
                     help="feasibility and stationarity tolerance")
    sub.add_argument("--max-iter", type=int, default=None)
    sub.add_argument("--multistart", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--spread", type=float, default=None)
    sub.add_argument("--emit-problem", action="store_true",
                     help="print the normalized problem document and exit")
    _add_output_flag(sub)


def _add_output_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--output",
        choices=("table", "csv", "structured"),
        default="table",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltanabla",
        description="Solve and verify delta-nabla isoperimetric problems "
        "on finite time scales.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("file")
    _add_common_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_res = sub.add_parser("residual", help="residuals for a candidate y")
    p_res.add_argument("file")
    p_res.add_argument("--y", required=True,
                       help="comma-separated values, one per scale point")
    p_res.add_argument("--lam", type=float, default=None,
                       help="multiplier lambda (omit for raw residuals)")
    p_res.add_argument("--lam0", type=float, default=1.0,
                       help="multiplier lambda0 (default 1)")
    _add_common_flags(p_res)
    p_res.set_defaults(func=cmd_residual)

    p_verify = sub.add_parser("verify", help="built-in verification suites")
    verify_sub = p_verify.add_subparsers(dest="what", required=True)
    p_ex = verify_sub.add_parser("example", help="end-to-end example check")
    p_ex.add_argument("--M", type=int, required=True)
    _add_output_flag(p_ex)
    p_ex.set_defaults(func=cmd_verify)
    p_id = verify_sub.add_parser("identities", help="randomized identity checks")
    p_id.add_argument("--seed", type=int, default=0)
    p_id.add_argument("--count", type=int, default=100)
    _add_output_flag(p_id)
    p_id.set_defaults(func=cmd_verify)

    p_eval = sub.add_parser("eval", help="evaluate an expression")
    p_eval.add_argument("expression")
    p_eval.add_argument("--at", required=True, help="t,u,v")
    p_eval.set_defaults(func=cmd_eval)

    p_diff = sub.add_parser("diff", help="print symbolic partials")
    p_diff.add_argument("expression")
    p_diff.set_defaults(func=cmd_diff)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EvaluationError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
