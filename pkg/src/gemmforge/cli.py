"""Command line interface: gemmforge bench | verify | tune."""

from __future__ import annotations

import argparse
import sys

from .backends import set_active_backend
from .bench import VerificationError, emit, run_sweep, tune, verify_algorithm
from .config import ConfigError, load_config, load_grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemmforge",
        description="Layered dense GEMM engines: benchmark, verify, tune.",
    )
    parser.add_argument(
        "--backend",
        choices=["auto", "c", "python"],
        default=None,
        help="kernel backend (default: compiled when available)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="time algorithms over a size sweep")
    p.add_argument("--config", metavar="FILE", help="key=value configuration file")
    p.add_argument("--alg", metavar="NAME[,NAME...]", help="algorithms to time")
    p.add_argument("--min", dest="size_min", type=int, help="smallest square size")
    p.add_argument("--max", dest="size_max", type=int, help="largest square size")
    p.add_argument("--step", dest="size_step", type=int, help="size increment")
    p.add_argument("--threads", type=int, help="worker threads for the packed engine")
    p.add_argument("--parallel-loop", choices=["ic", "jr"], dest="parallel_loop",
                   help="which loop the workers split")
    p.add_argument("--check", action="store_true", default=None,
                   help="verify every result against the reference engine")
    p.add_argument("--format", choices=["table", "csv", "matlab"],
                   help="output format")
    p.add_argument("--label", default="results", help="matrix name for matlab output")
    p.add_argument("--seed", type=int, help="operand generator seed")
    p.add_argument("--reps", type=int, default=3,
                   help="timed repetitions per measurement (default 3)")

    p = sub.add_parser("verify", help="compare one algorithm against the oracle")
    p.add_argument("--alg", required=True, help="algorithm to verify")
    p.add_argument("--shapes", metavar="m,n,k;...",
                   help="semicolon-separated m,n,k triples")
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--threads", type=int)
    p.add_argument("--parallel-loop", choices=["ic", "jr"], dest="parallel_loop")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("tune", help="grid-search blocking parameters")
    p.add_argument("--grid-file", required=True, metavar="FILE",
                   help="key = comma-separated candidates, keys mr nr mc kc nc")
    p.add_argument("--probe", type=int, default=256,
                   help="square problem size to time (default 256)")
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int, default=3)
    return parser


# Default verification shapes: small squares plus ragged and prime shapes
# that exercise every fringe path.
VERIFY_SHAPES = "8,8,8;16,16,16;31,33,32;64,64,64;97,89,83"


def _bench_overrides(args) -> dict:
    return {
        "algorithms": args.alg,
        "size_min": args.size_min,
        "size_max": args.size_max,
        "size_step": args.size_step,
        "threads": args.threads,
        "parallel_loop": args.parallel_loop,
        "check": args.check,
        "format": args.format,
        "seed": args.seed,
    }


def cmd_bench(args) -> int:
    cfg = load_config(args.config, cli=_bench_overrides(args))
    records = run_sweep(cfg, reps=args.reps)
    print(emit(records, cfg.format, label=args.label))
    return 0


def cmd_verify(args) -> int:
    cli = {
        "threads": args.threads,
        "parallel_loop": args.parallel_loop,
        "seed": args.seed,
        "shapes": args.shapes if args.shapes else VERIFY_SHAPES,
    }
    cfg = load_config(args.config, cli=cli)
    ok, checks = verify_algorithm(cfg, args.alg)
    width = max(len(str(d)) for ch in checks for d in (ch.m, ch.n, ch.k))
    for ch in checks:
        status = "PASS" if ch.ok else "FAIL"
        print(
            f"{ch.m:>{width}} {ch.n:>{width}} {ch.k:>{width}}  "
            f"max_abs_diff={ch.max_abs_diff:.6E}  tol={ch.tol:.6E}  {status}"
        )
    print(f"{args.alg}: {'all shapes pass' if ok else 'verification FAILED'}")
    return 0 if ok else 1


def cmd_tune(args) -> int:
    cli = {"seed": args.seed}
    cfg = load_config(args.config, cli=cli)
    grid = load_grid(args.grid_file)
    result = tune(cfg, grid, args.probe, reps=args.reps)
    for key in sorted(result.table):
        mr, nr, mc, kc, nc = key
        print(
            f"mr={mr} nr={nr} mc={mc} kc={kc} nc={nc}  "
            f"{result.table[key]:.2f} GFLOPS"
        )
    b = result.best
    print(
        f"best: mr={b.mr} nr={b.nr} mc={b.mc} kc={b.kc} nc={b.nc}  "
        f"{result.best_gflops:.2f} GFLOPS at size {result.probe_size}"
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.backend is not None:
            set_active_backend(args.backend)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "tune":
            return cmd_tune(args)
    except ConfigError as e:
        print(f"configuration error:\n{e}", file=sys.stderr)
        return 2
    except VerificationError as e:
        print(e.diagnostic)
        print(
            f"verification failed for {e.algorithm} at m={e.m} n={e.n} k={e.k}",
            file=sys.stderr,
        )
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
