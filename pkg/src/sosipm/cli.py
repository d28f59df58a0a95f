"""Command line interface.

Exit status: 0 on success, 2 for invalid input (malformed file, bad flag
values, degree overflow), 3 when the solver fails (slack left the cone or a
dense kernel broke down).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import frontend_io as fio
from .errors import ConeExitError, NumericError, ProblemFormatError, SosError
from .ipm import IpmParams, solve_blocks
from .oracle import dual_membership
from .polyspace import build_basis, make_dims
from .wsos import interval_weights

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3
THREADS_ENV = "SOS_IPM_THREADS"


class InputError(Exception):
    pass


def _add_solver_flags(p):
    p.add_argument("--delta", type=float, help="accuracy (default 1e-3)")
    p.add_argument("--eps-n", type=float, help="Newton tolerance (default 0.01)")
    p.add_argument("--eps-s", type=float, help="slack tolerance (default 0.009)")
    p.add_argument("--R", type=float, help="l1 bound on primal solutions (default 10*U)")
    p.add_argument("--naive", action="store_true", help="recompute T and N densely every step")
    p.add_argument("--early-exit", action="store_true",
                   help="stop once the auxiliary gap is below delta^2")
    p.add_argument("--max-iter", type=int, help="cap on iterations")
    p.add_argument("--trace", metavar="PATH", help="write per-iteration records (JSON lines)")
    p.add_argument("--seed", type=int, default=0, help="point selection seed")
    p.add_argument("--out", metavar="PATH", help="write the result document here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sosipm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file")
    p.add_argument("path")
    _add_solver_flags(p)

    p = sub.add_parser("lowerbound", help="certified lower bound of a polynomial")
    p.add_argument("--poly", required=True,
                   help="coefficients '3,2,1' (constant first) or a JSON exponent map")
    p.add_argument("--d", type=int, required=True, help="half degree")
    p.add_argument("--n", type=int, default=1, help="number of variables")
    p.add_argument("--interval", action="store_true", help="minimize over [-1, 1] (n=1)")
    _add_solver_flags(p)

    p = sub.add_parser("bench", help="maintained vs naive flop counts")
    p.add_argument("--sizes", default="1:1,1:2,1:4,1:6,1:8,2:2",
                   help="comma list of n:d pairs")
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    return parser


def _params(args, file_params=None) -> IpmParams:
    fp = dict(file_params or {})
    values = {
        "delta": args.delta if args.delta is not None else fp.get("delta", 1e-3),
        "eps_N": args.eps_n if args.eps_n is not None else fp.get("eps_N", 0.01),
        "eps_S": args.eps_s if args.eps_s is not None else fp.get("eps_S", 0.009),
        "R": args.R if args.R is not None else fp.get("R"),
    }
    try:
        return IpmParams(naive_mode=args.naive, early_exit=args.early_exit,
                         max_iter=args.max_iter, **values)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _run(program, params, args):
    sol, trace = solve_blocks(program, params)
    if args.trace:
        write_trace(args.trace, trace)
    return sol, trace


def write_trace(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace.records():
            fh.write(json.dumps(rec) + "\n")


def _floats(v):
    return [float(x) for x in np.asarray(v).ravel()]


def _certificate(program, s) -> bool:
    return all(dual_membership(P, s, f) for P, f in program.blocks)


def result_document(program, sol, trace, reduction=None, params=None) -> dict:
    doc = {
        "schema": fio.RESULT_SCHEMA,
        "status": "ok",
        "y": _floats(sol.y),
        "s": _floats(sol.s),
        "x": _floats(sol.x),
        "gap_bound": sol.gap_bound,
        "objective": sol.objective,
        "feasibility_residual": sol.feasibility_residual,
        "feasibility_bound": sol.feasibility_bound,
        "aux_gap": sol.aux_gap,
        "certified": bool(sol.certified),
        "dual_certificate": _certificate(program, sol.s),
        "iterations": sol.iterations,
        "eta": sol.eta,
        "rank_histogram": {str(k): v for k, v in trace.rank_histogram().items()},
        "flops": {"maintained": int(sum(trace.flops_maintained)),
                  "naive_estimate": int(sum(trace.flops_naive_estimate))},
    }
    if reduction is not None:
        doc["gamma"] = reduction.gamma(sol.x)
    if params is not None:
        doc["params"] = {"delta": params.delta, "eps_N": params.eps_N, "eps_S": params.eps_S,
                         "R": params.R if params.R is not None else 10.0 * program.U,
                         "naive": params.naive_mode}
    return doc


def _emit(doc, out):
    text = json.dumps(doc, indent=1) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    try:
        with open(args.path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InputError(f"{args.path}: {exc.strerror}") from None
    pf = fio.parse_problem(data, path=args.path)
    try:
        loaded = fio.build_program(pf, seed=args.seed)
    except (ValueError, SosError) as exc:
        raise InputError(f"{args.path}: {exc}") from None
    params = _params(args, loaded.params)
    sol, trace = _run(loaded.program, params, args)
    _emit(result_document(loaded.program, sol, trace, loaded.reduction, params), args.out)
    return EXIT_OK


def _poly_arg(text, n, d):
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            spec = json.loads(text)
        except ValueError as exc:
            raise InputError(f"--poly: {exc}") from None
    else:
        spec = text
    return fio.parse_poly(spec, n, d)


def cmd_lowerbound(args) -> int:
    if args.d < 1 or args.n < 1:
        raise InputError("--d and --n must be positive")
    terms = _poly_arg(args.poly, args.n, args.d)
    if args.interval:
        if args.n != 1:
            raise InputError("--interval needs --n 1")
        basis = fio.interval_basis(args.d)
        f = fio.evaluate_poly(terms, basis.points)
        red = fio.interval_min_frontend(f, basis, interval_weights(basis.points, args.d))
    else:
        basis = build_basis(make_dims(args.n, args.d), seed=args.seed)
        f = fio.evaluate_poly(terms, basis.points)
        red = fio.lower_bound_frontend(f, basis)
    params = _params(args)
    sol, trace = _run(red.program, params, args)
    doc = result_document(red.program, sol, trace, red, params)
    if args.out:
        _emit(doc, args.out)
    where = "[-1, 1]" if args.interval else "R^%d" % args.n
    print(f"gamma = {doc['gamma']:.10g}  (lower bound over {where}, "
          f"tolerance {sol.gap_bound:.3g})")
    print(f"dual certificate: {'ok' if doc['dual_certificate'] else 'FAILED'}; "
          f"aux gap {sol.aux_gap:.3e}; iterations {sol.iterations}")
    return EXIT_OK


def bench_rows(sizes, delta, max_iter=None):
    rows = []
    for n, d in sizes:
        basis = build_basis(make_dims(n, d))
        pts = basis.points
        # 1 + sum_j x_j^{2d} + x_1: SOS with an interior optimum
        f = 1.0 + np.sum(pts ** (2 * d), axis=1) + pts[:, 0]
        red = fio.lower_bound_frontend(f, basis)
        _, trace = solve_blocks(red.program, IpmParams(delta=delta, max_iter=max_iter))
        maint = int(sum(trace.flops_maintained))
        naive = int(sum(trace.flops_naive_estimate))
        rows.append({"n": n, "d": d, "L": basis.L, "U": basis.U,
                     "iterations": trace.iterations,
                     "flops_maintained": maint, "flops_naive": naive,
                     "ratio": maint / naive if naive else float("nan"),
                     "rank_histogram": {str(k): v for k, v in trace.rank_histogram().items()}})
    return rows


def _parse_sizes(text):
    out = []
    for item in text.split(","):
        try:
            n, d = (int(v) for v in item.split(":"))
        except ValueError:
            raise InputError(f"--sizes: bad entry {item!r}; expected n:d") from None
        if n < 1 or d < 1:
            raise InputError(f"--sizes: bad entry {item!r}")
        out.append((n, d))
    return out


def cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    if not 0 < args.delta < 1:
        raise InputError("--delta must lie in (0, 1)")
    rows = bench_rows(sizes, args.delta, args.max_iter)
    if args.json:
        print(json.dumps(rows, indent=1))
        return EXIT_OK
    print(f"{'n':>2} {'d':>2} {'L':>4} {'U':>5} {'iters':>7} {'maintained':>14} "
          f"{'naive':>14} {'ratio':>6}  ranks")
    for r in rows:
        print(f"{r['n']:>2} {r['d']:>2} {r['L']:>4} {r['U']:>5} {r['iterations']:>7} "
              f"{r['flops_maintained']:>14} {r['flops_naive']:>14} {r['ratio']:>6.3f}  "
              f"{r['rank_histogram']}")
    return EXIT_OK


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return contextlib.nullcontext()
    try:
        k = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if k < 1:
        raise InputError(f"{THREADS_ENV} must be positive")
    return threadpool_limits(limits=k)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"solve": cmd_solve, "lowerbound": cmd_lowerbound, "bench": cmd_bench}
    try:
        with _thread_limit():
            return handlers[args.command](args)
    except (InputError, ProblemFormatError) as exc:
        print(f"sosipm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConeExitError as exc:
        print(f"sosipm: solver diverged: {exc}", file=sys.stderr)
        if exc.trace is not None:
            path = getattr(args, "trace", None) or "sosipm-diverged-trace.jsonl"
            write_trace(path, exc.trace)
            print(f"sosipm: trace written to {path}", file=sys.stderr)
        return EXIT_DIVERGED
    except NumericError as exc:
        print(f"sosipm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


def run():
    sys.exit(main())
