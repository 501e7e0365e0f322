"""Command line front end.

Exit codes: 0 success, 2 unreadable or invalid input, 3 numerical failure
(singular KKT system, no convergence, eigensolver stagnation), 4 degenerate
or infeasible problem (too few points, integrand undefined on the data).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import files
from .errors import (DegenerateScale, DomainError, EvalDomain, InvalidSpec,
                     NumericalFailure, ParseError)
from .expr import parse
from .sturm import EigenResult, solve_eigs
from .timescale import GridFunction, cumulative_integral, delta_derivative, delta_integral
from .variational import dr_deviation, el_residual, is_extremal_of_I, solve_iso

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4


def render_report(report, format: str = "table") -> str:
    """Render a :class:`SolveReport` or :class:`EigenResult` as JSON or a table."""
    if format == "json":
        return files.dumps(report.as_dict())
    if format != "table":
        raise ValueError(f"unknown format {format!r}")
    if isinstance(report, EigenResult):
        header = ("k", "lambda", "J(y_k)", "residual_max")
        rows = [(str(k + 1), files.fmt(lam), files.fmt(j), files.fmt(r))
                for k, (lam, j, r) in enumerate(zip(report.lambdas, report.rayleigh,
                                                    report.residual_max))]
        return _table(header, rows)
    fields = [(k, v) for k, v in report.as_dict().items() if k not in ("t", "y")]
    rows = [(k, files.fmt(v) if isinstance(v, float) else str(v)) for k, v in fields]
    return _table(("field", "value"), rows)


def _table(header, rows):
    widths = [max(len(str(r[c])) for r in [header, *rows]) for c in range(len(header))]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in [header, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _emit(text, path=None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _sampled(ts, src):
    f = parse(src)
    if not f.variables <= {"t"}:
        raise InvalidSpec("--f may only depend on t")
    vals = np.broadcast_to(f.eval(t=ts.points), ts.points.shape)
    if np.any(np.isnan(vals)):
        raise DomainError(f"f = {f} undefined", int(np.argmax(np.isnan(vals))))
    return GridFunction(ts, vals)


def cmd_info(args):
    ts = files.read_timescale(args.timescale)
    cols = {k: [] for k in ("t", "sigma", "rho", "mu", "class_literal", "class_idealized")}
    for i in range(len(ts)):
        cls = ts.classify(i)
        cols["t"].append(ts.points[i])
        cols["sigma"].append(ts.points[ts.sigma(i)])
        cols["rho"].append(ts.points[ts.rho(i)])
        cols["mu"].append(ts.mu(i))
        cols["class_literal"].append(str(cls["literal"]))
        cols["class_idealized"].append(str(cls["idealized"]))
    _emit(files.write_csv(list(cols), list(cols.values())), args.out)
    return EXIT_OK


def cmd_deriv(args):
    ts = files.read_timescale(args.timescale)
    f = _sampled(ts, args.f)
    d = delta_derivative(f)
    _emit(files.write_csv(["t", "f", "f_delta"], [d.t, f.values[: len(d)], d.values]), args.out)
    return EXIT_OK


def cmd_integ(args):
    ts = files.read_timescale(args.timescale)
    f = _sampled(ts, args.f)
    if args.cumulative:
        F = cumulative_integral(f)
        _emit(files.write_csv(["t", "F"], [ts.points, F.values]), args.out)
    else:
        _emit(files.fmt(delta_integral(f)) + "\n", args.out)
    return EXIT_OK


def cmd_solve(args):
    problem, opts = files.read_problem(args.problem)
    if args.tol is not None:
        opts.tol = args.tol
    if args.lambda0 is not None:
        opts.lambda0 = args.lambda0
    report = solve_iso(problem, opts)
    if args.out:
        Path(args.out).write_text(render_report(report, "json"))
    if args.traj:
        Path(args.traj).write_text(
            files.write_csv(["t", "y"], [problem.scale.points, report.y.values]))
    sys.stdout.write(render_report(report, args.format))
    if report.status == "converged":
        return EXIT_OK
    if report.status == "domain_error":
        print(f"error: {report.message}", file=sys.stderr)
        return EXIT_DEGENERATE
    if report.status == "singular" and report.extremal_of_I_deviation <= opts.tol:
        print("error: abnormal problem, the trajectory is an extremal of the constraint "
              f"functional I (extremal-of-I deviation {files.fmt(report.extremal_of_I_deviation)}); "
              "no Lagrange multiplier exists", file=sys.stderr)
    else:
        print(f"error: solver stopped with status {report.status}: {report.message}",
              file=sys.stderr)
    return EXIT_NUMERIC


def cmd_check(args):
    problem, opts = files.read_problem(args.problem)
    y = files.read_trajectory(args.traj, problem.scale)
    res = el_residual(problem, y, args.lam)
    dev = dr_deviation(problem, y, args.lam)
    ext = is_extremal_of_I(problem, y, opts.tol)
    rows = [
        ("el_residual_max", files.fmt(np.max(np.abs(res.values)))),
        ("dr_deviation", files.fmt(dev)),
        ("extremal_of_I_deviation", files.fmt(ext.deviation)),
    ]
    sys.stdout.write("".join(f"{k} {v}\n" for k, v in rows))
    return EXIT_OK


def cmd_sturm(args):
    problem = files.read_sl_problem(args.problem)
    res = solve_eigs(problem)
    if args.out:
        Path(args.out).write_text(render_report(res, "json"))
    if args.eigcsv:
        header = ["t"] + [f"y{k + 1}" for k in range(len(res.lambdas))]
        Path(args.eigcsv).write_text(files.write_csv(
            header, [problem.scale.points] + [f.values for f in res.eigenfunctions]))
    sys.stdout.write(render_report(res, args.format))
    for group in res.clusters:
        print(f"warning: eigenvalues {[k + 1 for k in group]} are numerically clustered",
              file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsvar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("info", help="point table of a time scale")
    p.add_argument("timescale")
    p.add_argument("--out")
    p.set_defaults(func=cmd_info)

    for name, func, helptext in (("deriv", cmd_deriv, "delta derivative of f(t)"),
                                 ("integ", cmd_integ, "delta integral of f(t)")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("timescale")
        p.add_argument("--f", required=True, help="expression in t")
        p.add_argument("--out")
        if name == "integ":
            p.add_argument("--cumulative", action="store_true", help="emit the running integral")
        p.set_defaults(func=func)

    p = sub.add_parser("solve-iso", help="solve an isoperimetric problem")
    p.add_argument("problem")
    p.add_argument("--out", help="result JSON")
    p.add_argument("--traj", help="trajectory CSV")
    p.add_argument("--tol", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="optimality diagnostics of a given trajectory")
    p.add_argument("problem")
    p.add_argument("--traj", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sturm", help="Sturm-Liouville eigenpairs")
    p.add_argument("problem")
    p.add_argument("--out", help="eigenvalue JSON")
    p.add_argument("--eigcsv", help="eigenfunction CSV")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_sturm)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except DegenerateScale as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParseError, InvalidSpec, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, EvalDomain) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
