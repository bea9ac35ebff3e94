"""Command-line driver: optimize, analyze, diagnose, tensor, series, examples.

Exit codes: 0 success, 1 domain or validation errors, 2 malformed input.
Every produced artifact is deterministic for fixed inputs; randomized helpers
(--random-directions) honor the SINGULIM_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from dataclasses import asdict
from fractions import Fraction

from .descent import (
    DescentConfig,
    check_conditions,
    optimize,
    read_trace_csv,
    write_trace_csv,
)
from .homog import CPModel, build_cp_objective
from .limits import (
    DEFAULT_THETA_GRID,
    direction_trail,
    find_cluster_point,
    lojasiewicz_probe,
    rate_classify,
    trail_certifies_safe_approach,
)
from .polyalg import DomainViolation
from .problems import (
    ProblemFile,
    ProblemFormatError,
    load_problem,
    poly_to_terms,
    save_problem,
    write_bundled,
)
from .singan import (
    UnboundedFunctionError,
    UnsafeDirectionError,
    analyze_singularity,
    direction_verdict,
    taylor_line,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MALFORMED = 2


class CliError(Exception):
    """User-facing failure carrying the intended exit code."""

    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _parse_csv_point(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"{flag}: {text!r} is not a comma-separated number list",
                       EXIT_MALFORMED)


def _parse_exact_point(text: str, flag: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(v) for v in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise CliError(f"{flag}: {text!r} is not a comma-separated rational list",
                       EXIT_MALFORMED)


def _load(path: str) -> ProblemFile:
    try:
        return load_problem(path)
    except FileNotFoundError:
        raise CliError(f"--problem: file {path!r} not found", EXIT_MALFORMED)
    except ProblemFormatError as exc:
        raise CliError(f"--problem: {exc}", EXIT_MALFORMED)


def _seeded_rng() -> random.Random:
    return random.Random(int(os.environ.get("SINGULIM_SEED", "0")))


# -- subcommands -----------------------------------------------------------

def cmd_optimize(args) -> int:
    problem = _load(args.problem)
    f = problem.rational()
    x0 = _parse_csv_point(args.x0, "--x0")
    if len(x0) != problem.n_vars:
        raise CliError(
            f"--x0: got {len(x0)} coordinates, problem has {problem.n_vars} variables"
        )
    try:
        cfg = DescentConfig(
            sigma_armijo=args.sigma,
            backtrack_factor=args.beta,
            initial_step=args.step0,
            max_iters=args.max_iters,
            grad_tol=args.grad_tol,
        )
    except ValueError as exc:
        raise CliError(f"configuration: {exc}")
    trace = optimize(f, x0, cfg)
    write_trace_csv(trace, args.trace_out)
    if args.grid_out:
        _write_grid(f, trace, args)
    final = trace.iterates[-1]
    norm = math.sqrt(math.fsum(v * v for v in final))
    print(f"iterations: {len(trace) - 1}")
    print(f"stop_reason: {trace.stop_reason}")
    print(f"final_norm: {norm:.17g}")
    if trace.f_values:
        print(f"final_f: {trace.f_values[-1]:.17g}")
    print(f"trace: {args.trace_out}")
    return EXIT_OK


def _write_grid(f, trace, args) -> None:
    """Emit a rectangular grid of f-samples for external plotting."""
    if f.n_vars != 2:
        raise CliError("--grid-out requires a 2-variable problem")
    if args.grid_bounds:
        x_lo, x_hi, y_lo, y_hi = _parse_csv_point(args.grid_bounds, "--grid-bounds")
    else:
        xs = [p[0] for p in trace.iterates]
        ys = [p[1] for p in trace.iterates]
        pad_x = 0.1 * (max(xs) - min(xs) or 1.0)
        pad_y = 0.1 * (max(ys) - min(ys) or 1.0)
        x_lo, x_hi = min(xs) - pad_x, max(xs) + pad_x
        y_lo, y_hi = min(ys) - pad_y, max(ys) + pad_y
    n = args.grid_n
    with open(args.grid_out, "w") as handle:
        handle.write("x,y,f\n")
        for i in range(n):
            x = x_lo + (x_hi - x_lo) * i / (n - 1)
            for j in range(n):
                y = y_lo + (y_hi - y_lo) * j / (n - 1)
                try:
                    value = f.eval((x, y))
                except DomainViolation:
                    value = float("nan")
                handle.write(f"{x:.17g},{y:.17g},{value:.17g}\n")


def _poly_text(poly) -> str:
    return json.dumps(poly_to_terms(poly))


def cmd_analyze(args) -> int:
    problem = _load(args.problem)
    f = problem.rational()
    point = _parse_exact_point(args.point, "--point")
    if len(point) != problem.n_vars:
        raise CliError(
            f"--point: got {len(point)} coordinates, problem has {problem.n_vars} variables"
        )
    try:
        pencil = analyze_singularity(f, point)
    except UnboundedFunctionError as exc:
        print(f"unbounded: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"n_min: {pencil.n_min}")
    print(f"leading_pencil: {_poly_text(pencil.leading)}")
    directions = []
    for text in args.direction or []:
        directions.append(_parse_exact_point(text, "--direction"))
    rng = _seeded_rng()
    for _ in range(args.random_directions):
        raw = [rng.gauss(0.0, 1.0) for _ in range(problem.n_vars)]
        norm = math.sqrt(math.fsum(v * v for v in raw))
        directions.append(tuple(v / norm for v in raw))
    for d in directions:
        try:
            verdict = direction_verdict(pencil, d)
        except ValueError as exc:
            raise CliError(f"--direction: {exc}")
        limit = "undefined" if verdict.limit_value is None else f"{verdict.limit_value:.17g}"
        coords = ",".join(str(v) for v in d)
        print(
            f"direction {coords}: safe={verdict.in_safe_set} "
            f"pencil={verdict.pencil_value:.17g} limit={limit}"
        )
    return EXIT_OK


def cmd_series(args) -> int:
    problem = _load(args.problem)
    f = problem.rational()
    point = _parse_exact_point(args.point, "--point")
    direction = _parse_exact_point(args.direction, "--direction")
    if len(point) != problem.n_vars or len(direction) != problem.n_vars:
        raise CliError(
            f"--point/--direction must have {problem.n_vars} coordinates"
        )
    try:
        line = taylor_line(f, point, direction, n_terms=args.n_terms)
    except UnboundedFunctionError as exc:
        print(f"unbounded: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UnsafeDirectionError as exc:
        print(f"unsafe direction: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"recurrence_order: {line.recurrence_order}")
    print("recurrence_weights: " + ",".join(f"{w:.17g}" for w in line.recurrence_weights))
    print(f"radius_lower_bound: {line.radius_lower_bound:.17g}")
    for n, c in enumerate(line.coeffs):
        print(f"c_{n}: {c:.17g}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    problem = _load(args.problem)
    f = problem.rational()
    try:
        trace = read_trace_csv(args.trace)
    except FileNotFoundError:
        raise CliError(f"--trace: file {args.trace!r} not found", EXIT_MALFORMED)
    except ValueError as exc:
        raise CliError(f"--trace: {exc}", EXIT_MALFORMED)
    if len(trace) < 2:
        raise CliError(
            f"--trace: {args.trace!r} has {len(trace)} iterate(s); diagnosis "
            "needs at least 2", EXIT_MALFORMED,
        )
    tail_start = int(len(trace) * args.tail_fraction)
    tail_start = min(tail_start, len(trace.step_norms) - 1)
    report: dict = {"trace": args.trace, "iterations": len(trace) - 1,
                    "stop_reason": trace.stop_reason}
    conditions = check_conditions(trace, tail_start)
    report["conditions"] = asdict(conditions)

    cluster = find_cluster_point(trace)
    report["cluster_point"] = list(cluster) if cluster is not None else None

    x_star = None
    if args.x_star:
        x_star = _parse_exact_point(args.x_star, "--x-star")
    elif cluster is not None and all(float(v) == int(v) for v in cluster):
        x_star = tuple(Fraction(int(v)) for v in cluster)
    if x_star is not None:
        try:
            pencil = analyze_singularity(f, x_star)
            trail = direction_trail(trace, pencil)
            report["direction_trail"] = {
                "center": [float(v) for v in x_star],
                "n_min": pencil.n_min,
                "min_tail_pencil": trail.min_tail_pencil,
                "skipped": trail.skipped,
                "safe_approach": trail_certifies_safe_approach(trail),
            }
        except UnboundedFunctionError as exc:
            report["direction_trail"] = {"error": str(exc)}
        report["rate"] = asdict(rate_classify(trace, [float(v) for v in x_star],
                                              tail_start))
    try:
        certs = lojasiewicz_probe(trace, tail_start, DEFAULT_THETA_GRID)
        report["certificates"] = [asdict(c) for c in certs]
    except ValueError as exc:
        report["certificates"] = {"error": str(exc)}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.report:
        with open(args.report, "w") as handle:
            handle.write(text)
        print(f"report: {args.report}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_tensor(args) -> int:
    try:
        dims = tuple(int(v) for v in args.dims.split(","))
    except ValueError:
        raise CliError(f"--dims: {args.dims!r} is not a comma-separated integer list",
                       EXIT_MALFORMED)
    try:
        with open(args.target) as handle:
            nested = json.load(handle)
    except FileNotFoundError:
        raise CliError(f"--target: file {args.target!r} not found", EXIT_MALFORMED)
    except json.JSONDecodeError as exc:
        raise CliError(f"--target: invalid JSON: {exc}", EXIT_MALFORMED)
    try:
        model = CPModel(dims, args.rank)
        obj = build_cp_objective(model, nested)
    except ValueError as exc:
        raise CliError(f"tensor objective: {exc}")
    problem = ProblemFile(
        model.n_params, obj.f_hat.numer, obj.f_hat.denom,
        name=f"cp_{'x'.join(map(str, dims))}_rank{args.rank}",
    )
    save_problem(problem, args.emit_problem)
    print(f"n_params: {model.n_params}")
    print(f"target_norm_sq: {obj.target_norm_sq:.17g}")
    print(f"problem: {args.emit_problem}")
    return EXIT_OK


def cmd_examples(args) -> int:
    written = write_bundled(args.out_dir)
    for path in written:
        print(f"wrote: {path}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singulim",
        description=(
            "Certified gradient descent and singularity diagnostics for "
            "bounded rational objectives."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="run Armijo gradient descent")
    p_opt.add_argument("--problem", required=True)
    p_opt.add_argument("--x0", required=True, help="start point, comma-separated")
    p_opt.add_argument("--sigma", type=float, default=0.1)
    p_opt.add_argument("--beta", type=float, default=0.5)
    p_opt.add_argument("--step0", type=float, default=1.0)
    p_opt.add_argument("--max-iters", type=int, default=100_000)
    p_opt.add_argument("--grad-tol", type=float, default=1e-12)
    p_opt.add_argument("--trace-out", required=True)
    p_opt.add_argument("--grid-out", help="CSV of f-samples for plotting")
    p_opt.add_argument("--grid-bounds", help="x_lo,x_hi,y_lo,y_hi for --grid-out")
    p_opt.add_argument("--grid-n", type=int, default=101)
    p_opt.set_defaults(func=cmd_optimize)

    p_ana = sub.add_parser("analyze", help="safe-direction analysis at a point")
    p_ana.add_argument("--problem", required=True)
    p_ana.add_argument("--point", required=True, help="exact rational coordinates")
    p_ana.add_argument("--direction", action="append",
                       help="direction to test; repeatable")
    p_ana.add_argument("--random-directions", type=int, default=0,
                       help="also test K random unit directions")
    p_ana.set_defaults(func=cmd_analyze)

    p_ser = sub.add_parser("series", help="Taylor coefficients along a direction")
    p_ser.add_argument("--problem", required=True)
    p_ser.add_argument("--point", required=True)
    p_ser.add_argument("--direction", required=True)
    p_ser.add_argument("--n-terms", type=int, default=64)
    p_ser.set_defaults(func=cmd_series)

    p_dia = sub.add_parser("diagnose", help="convergence diagnostics on a trace")
    p_dia.add_argument("--trace", required=True)
    p_dia.add_argument("--problem", required=True)
    p_dia.add_argument("--x-star", help="candidate cluster point, exact rationals")
    p_dia.add_argument("--tail-fraction", type=float, default=0.5)
    p_dia.add_argument("--report", help="write JSON report here; default stdout")
    p_dia.set_defaults(func=cmd_diagnose)

    p_ten = sub.add_parser("tensor", help="emit a CP-approximation problem file")
    p_ten.add_argument("--dims", required=True, help="e.g. 2,2,2")
    p_ten.add_argument("--rank", type=int, required=True)
    p_ten.add_argument("--target", required=True,
                       help="JSON file of nested arrays, row-major")
    p_ten.add_argument("--emit-problem", required=True)
    p_ten.set_defaults(func=cmd_tensor)

    p_ex = sub.add_parser("examples", help="write the bundled problem files")
    p_ex.add_argument("--out-dir", required=True)
    p_ex.set_defaults(func=cmd_examples)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DomainViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
