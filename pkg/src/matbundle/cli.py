"""Command line interface: ``matbundle {verify,approx,chart}``.

A JSON report goes to stdout and a one-line summary to stderr.

Exit codes: 0 pass, 1 I/O error, 2 usage error, 3 point outside the chart
domain, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LineSearchFailed, OutOfChartDomain, RankDeficient, RankMismatch, SingularFactor
from .fixed_rank import FixedRankChart, RankRPoint
from .numerics import numerical_rank, random_full_rank, random_rank_r, read_matrix, truncated_svd, write_matrix
from .optimize import OptimizerConfig, distance_objective, minimize, random_start
from .verify import FD_STEP, SUITES, rel, run_suite

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_DOMAIN, EXIT_FAIL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _emit(report: dict, summary: str, output: str | None = None) -> None:
    text = json.dumps(report, indent=2)
    print(text)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    print(summary, file=sys.stderr)


def _load_input(args, make) -> np.ndarray:
    if args.input is None:
        return make()
    try:
        return read_matrix(args.input)
    except OSError:
        raise
    except ValueError as exc:
        raise OSError(f"cannot parse matrix file {args.input}: {exc}") from exc


# -- verify -----------------------------------------------------------------------


def cmd_verify(args) -> int:
    try:
        report = run_suite(args.suite, n=args.n, m=args.m, k=args.k, r=args.r,
                           seed=args.seed, trials=args.trials)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(report.to_dict(), report.summary(), args.output)
    return EXIT_OK if report.passed else EXIT_FAIL


# -- approx -----------------------------------------------------------------------


def cmd_approx(args) -> int:
    rng_seed = np.random.SeedSequence(args.seed)
    a = _load_input(args, lambda: np.random.default_rng(rng_seed).standard_normal((args.n, args.m)))
    n, m = a.shape
    r = args.r
    if not 1 <= r < min(n, m):
        raise UsageError(f"need 1 <= r < min(n, m) = {min(n, m)}, got r={r}")
    if numerical_rank(a).numerical_rank < r:
        raise UsageError(f"input has numerical rank below r={r}")

    cfg = OptimizerConfig(max_iters=args.max_iters, grad_tol=args.tol if args.tol is not None else 1e-9)
    t0 = time.perf_counter()
    point, trace = minimize(random_start(a, r, args.seed), distance_objective(a), cfg)
    wall = time.perf_counter() - t0

    oracle = truncated_svd(a, r)
    err = float(np.linalg.norm(point.matrix - oracle) / np.linalg.norm(oracle))
    # exact-rank input must be reproduced much more tightly
    tol = 1e-8 if numerical_rank(a).numerical_rank == r else 1e-6
    passed = err <= tol

    trace_path = args.trace
    if args.output:
        write_matrix(args.output, point.matrix)
        if trace_path is None:
            trace_path = str(Path(args.output).with_suffix(".trace.jsonl"))
    if trace_path:
        trace.write_jsonl(trace_path)

    report = {
        "command": "approx",
        "status": "pass" if passed else "fail",
        "dims": {"n": n, "m": m, "r": r},
        "seed": args.seed,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "final_objective": trace.records[-1].f,
        "final_grad_norm": trace.records[-1].grad_norm,
        "relative_error_vs_svd": err,
        "tolerance": tol,
        "output": args.output,
        "trace": trace_path,
        "wall_time": wall,
    }
    _emit(report, f"approx: relative error vs truncated SVD {err:.3e} after {trace.iterations} iterations")
    return EXIT_OK if passed else EXIT_FAIL


# -- chart ------------------------------------------------------------------------


def _random_chart(n, m, r, rng) -> FixedRankChart:
    return FixedRankChart.from_factors(random_full_rank(n, r, rng), random_full_rank(m, r, rng))


def _chart_cases(op: str, a: np.ndarray, r: int, rng, tol: float) -> list[dict]:
    n, m = a.shape
    chart = _random_chart(n, m, r, rng)
    coords = chart.apply(a)
    cases = []

    def case(name, residual, tolerance):
        cases.append({"name": name, "status": "pass" if residual <= tolerance else "fail",
                      "residual": float(residual), "tolerance": tolerance})

    if op == "roundtrip":
        case("theta_roundtrip", rel(chart.inverse(coords), a), tol)
        case("near_boundary_flag", float(coords.near_boundary), 0.0)
    elif op == "transition":
        other = _random_chart(n, m, r, rng)
        moved = chart.transition(other, coords)
        case("transition_reconstruction", rel(other.inverse(moved), a), tol)
        back = other.transition(chart, moved)
        case("transition_inverse", max(rel(b, c) for b, c in zip(back[:3], coords[:3])), tol)
    else:
        t = (rng.standard_normal((n - r, r)), rng.standard_normal((m - r, r)), rng.standard_normal((r, r)))
        diff = chart.differential(coords, t)
        plus = chart.inverse(tuple(c + FD_STEP * d for c, d in zip(coords[:3], t)))
        minus = chart.inverse(tuple(c - FD_STEP * d for c, d in zip(coords[:3], t)))
        fd = (plus - minus) / (2 * FD_STEP)
        case("differential_finite_difference", np.linalg.norm(fd - diff) / np.linalg.norm(diff), 1e-5)
        p = RankRPoint.from_matrix(a, r)
        centre = FixedRankChart.at(p)
        back = centre.tangent_pull(p.G, centre.tangent_push(p.G, t))
        case("pull_push", max(rel(b, s) for b, s in zip(back, t)), tol)
    return cases


def cmd_chart(args) -> int:
    r = args.r
    ss = np.random.SeedSequence(args.seed)
    data_seed, chart_seed = ss.spawn(2)
    if not 1 <= r < min(args.n, args.m) and args.input is None:
        raise UsageError(f"need 1 <= r < min(n, m), got n={args.n}, m={args.m}, r={r}")
    a = _load_input(args, lambda: random_rank_r(args.n, args.m, r, data_seed))
    n, m = a.shape
    if not 1 <= r < min(n, m):
        raise UsageError(f"need 1 <= r < min(n, m) = {min(n, m)}, got r={r}")
    tol = args.tol if args.tol is not None else 1e-9
    base = {"command": "chart", "op": args.op, "dims": {"n": n, "m": m, "r": r}, "seed": args.seed}
    try:
        cases = _chart_cases(args.op, a, r, np.random.default_rng(chart_seed), tol)
    except RankMismatch as exc:
        raise UsageError(str(exc)) from exc
    except (OutOfChartDomain, SingularFactor) as exc:
        report = {**base, "status": "out_of_domain", "error": str(exc), "cases": []}
        _emit(report, f"chart {args.op}: out of chart domain ({exc})", args.output)
        return EXIT_DOMAIN
    passed = all(c["status"] == "pass" for c in cases)
    report = {**base, "status": "pass" if passed else "fail", "cases": cases}
    _emit(report, f"chart {args.op}: {'pass' if passed else 'fail'}", args.output)
    return EXIT_OK if passed else EXIT_FAIL


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=20, help="rows of fixed-rank matrices")
    common.add_argument("--m", type=int, default=15, help="columns of fixed-rank matrices")
    common.add_argument("--k", type=int, default=12, help="ambient dimension for Grassmann/Stiefel")
    common.add_argument("--r", type=int, default=3, help="rank / subspace dimension")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", help="write the main result to this file")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="matbundle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run invariant suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("approx", parents=[common], help="best rank-r approximation by chart descent")
    p.add_argument("--input", help="matrix file (default: seeded random n x m matrix)")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, help="coordinate gradient tolerance (default 1e-9)")
    p.add_argument("--trace", help="trace JSONL path (default: next to --output)")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("chart", parents=[common], help="exercise a fixed-rank chart on one matrix")
    p.add_argument("--op", choices=("roundtrip", "transition", "tangent"), default="roundtrip")
    p.add_argument("--input", help="rank-r matrix file (default: seeded random)")
    p.add_argument("--tol", type=float, help="residual tolerance (default 1e-9)")
    p.set_defaults(func=cmd_chart)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"matbundle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankDeficient, RankMismatch, SingularFactor) as exc:
        print(f"matbundle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LineSearchFailed as exc:
        print(f"matbundle: optimizer failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"matbundle: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
