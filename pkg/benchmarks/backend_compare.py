#!/usr/bin/env python3
"""Compare the compiled and pure-Python backends on the same problems.

Times each engine on each available backend and prints one table per
engine with the per-size speedup of the compiled extension over the
interpreter.  Results are verified bitwise identical across backends
before timing, so the ratio is the whole story.

Usage:
    python3 benchmarks/backend_compare.py
    python3 benchmarks/backend_compare.py --sizes 16,32,64 --reps 3
"""

import argparse
import sys
import time

from gemmforge.backends import available_backends, get_backend
from gemmforge.bench import make_operands
from gemmforge.goto import GotoParams, gemm_goto
from gemmforge.kernels import gemm_colwise, gemm_naive, gemm_register_tiled
from gemmforge.matrix import copy_matrix, gflops, max_abs_diff


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument(
        "--sizes", default="16,32,64,128,256",
        help="comma-separated square sizes (default 16,32,64,128,256)",
    )
    parser.add_argument("--reps", type=int, default=3,
                        help="timed repetitions, best kept (default 3)")
    parser.add_argument("--seed", type=int, default=42)
    return parser.parse_args(argv)


ENGINES = {
    "naive": lambda a, b, c, bk: gemm_naive(a, b, c, backend=bk),
    "colwise": lambda a, b, c, bk: gemm_colwise(a, b, c, backend=bk),
    "register_tiled": lambda a, b, c, bk: gemm_register_tiled(
        a, b, c, 4, 4, backend=bk),
    "goto": lambda a, b, c, bk: gemm_goto(
        a, b, c, GotoParams(), backend=bk),
}


def best_time(run, a, b, c0, reps):
    best = float("inf")
    out = None
    for _ in range(max(1, reps)):
        c = copy_matrix(c0)
        t0 = time.perf_counter()
        run(a, b, c)
        best = min(best, time.perf_counter() - t0)
        out = c
    return best, out


def main(argv=None):
    args = parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    names = available_backends()
    if len(names) < 2:
        print("compiled backend not built; nothing to compare", file=sys.stderr)
        return 1
    cb, pyb = get_backend("c"), get_backend("python")

    for engine_name, run in ENGINES.items():
        print(f"\n{engine_name}")
        print(f"{'size':>6}  {'c GFLOPS':>10}  {'py GFLOPS':>10}  {'speedup':>8}")
        for size in sizes:
            a, b, c0 = make_operands(args.seed, size, size, size)
            t_c, got_c = best_time(
                lambda a, b, c: run(a, b, c, cb), a, b, c0, args.reps)
            t_py, got_py = best_time(
                lambda a, b, c: run(a, b, c, pyb), a, b, c0, args.reps)
            if max_abs_diff(got_c, got_py).max_abs_diff != 0.0:
                print(f"backend results differ at size {size}", file=sys.stderr)
                return 1
            rate_c = gflops(size, size, size, t_c)
            rate_py = gflops(size, size, size, t_py)
            print(f"{size:>6}  {rate_c:>10.3f}  {rate_py:>10.3f}"
                  f"  {t_py / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
