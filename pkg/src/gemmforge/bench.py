"""Benchmark sweeps, result verification, emit formats and grid autotuning.

Timing protocol: per (shape, engine), one untimed warm-up run, then the
minimum wall time over a fixed number of repetitions.  C is restored from
the pristine operand outside the timed region before every repetition,
since the engines accumulate in place.  Rates are 2*m*n*k / time in GFLOPS.

Operands come from the deterministic generator, so every run of the same
configuration times identical data.
"""

from __future__ import annotations

import itertools
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from .config import Config
from .goto import GotoParams, param_violations
from .kernels import tolerance
from .matrix import (
    Matrix,
    alloc_matrix,
    copy_matrix,
    fill_random,
    gflops,
    max_abs_diff,
    to_array,
)
from .registry import default_registry

__all__ = [
    "BenchRecord",
    "TuneResult",
    "VerificationError",
    "failure_line",
    "run_sweep",
    "verify_algorithm",
    "emit",
    "tune",
]

REF_ALGORITHM = "naive"  # every result is judged against this engine


@dataclass
class BenchRecord:
    """One benchmark measurement: a shape, the reference rate, and one
    candidate algorithm's rate.  max_abs_diff is None unless checking was on."""

    m: int
    n: int
    k: int
    ref_gflops: float
    alg_gflops: float
    max_abs_diff: float | None
    algorithm: str
    threads: int


@dataclass
class TuneResult:
    """Outcome of a grid search: the winning parameters and the full table."""

    best: GotoParams
    best_gflops: float
    table: dict[tuple[int, int, int, int, int], float]
    probe_size: int


class VerificationError(RuntimeError):
    """An engine produced a result outside tolerance of the oracle."""

    def __init__(self, diagnostic: str, m=None, n=None, k=None, algorithm=None):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
        self.m, self.n, self.k = m, n, k
        self.algorithm = algorithm


def failure_line(i: int, j: int, got: float, want: float) -> str:
    """Mismatch diagnostic, in the classic test-driver form."""
    return f"C[ {i} ][ {j} ] != C_ref, {got:.6E}, {want:.6E}"


def _operand_seed(seed: int, role: int, m: int, n: int, k: int) -> int:
    # Distinct, deterministic stream per (seed, role, shape).  Constants are
    # the splitmix64 increment and mixers, reused as a cheap integer hash.
    h = (seed ^ (role * 0x9E3779B97F4A7C15)) & 0xFFFFFFFFFFFFFFFF
    for v in (m, n, k):
        h = (h + 0x9E3779B97F4A7C15 + v) & 0xFFFFFFFFFFFFFFFF
        h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        h ^= h >> 31
    return h


def make_operands(seed: int, m: int, n: int, k: int):
    """Deterministic A, B, C for one problem shape."""
    a = fill_random(alloc_matrix(m, k), _operand_seed(seed, 1, m, n, k))
    b = fill_random(alloc_matrix(k, n), _operand_seed(seed, 2, m, n, k))
    c = fill_random(alloc_matrix(m, n), _operand_seed(seed, 3, m, n, k))
    return a, b, c


def _best_time(engine, a: Matrix, b: Matrix, c0: Matrix, reps: int):
    """Minimum wall time over reps runs, plus the (deterministic) result."""
    c = copy_matrix(c0)
    engine(a, b, c)  # warm-up, untimed
    best = float("inf")
    result = c
    for _ in range(max(1, reps)):
        c = copy_matrix(c0)  # reset outside the timed region
        t0 = time.perf_counter()
        engine(a, b, c)
        dt = time.perf_counter() - t0
        if dt < best:
            best = dt
        result = c
    return best, result


def run_sweep(cfg: Config, registry=None, reps: int = 3) -> list[BenchRecord]:
    """Benchmark every configured algorithm over the configured shapes.

    Returns records in sweep order: shapes ascending, algorithms in the
    configured order within each shape.  With cfg.check on, each result is
    compared against the reference engine's result and the first mismatch
    beyond tolerance raises VerificationError.
    """
    reg = default_registry() if registry is None else registry
    ref_engine = reg.build_engine(REF_ALGORITHM, cfg)
    engines = [(name, reg.build_engine(name, cfg)) for name in cfg.algorithms]
    records = []
    for m, n, k in cfg.sweep_shapes():
        a, b, c0 = make_operands(cfg.seed, m, n, k)
        ref_time, ref_c = _best_time(ref_engine, a, b, c0, reps)
        ref_rate = gflops(m, n, k, ref_time)
        tol = tolerance(k, float(np.abs(to_array(a)).max()),
                        float(np.abs(to_array(b)).max()))
        for name, engine in engines:
            alg_time, alg_c = _best_time(engine, a, b, c0, reps)
            diff = None
            if cfg.check:
                report = max_abs_diff(alg_c, ref_c, tol)
                diff = report.max_abs_diff
                if report.first_bad_i is not None:
                    raise VerificationError(
                        failure_line(
                            report.first_bad_i, report.first_bad_j,
                            report.value_got, report.value_expected,
                        ),
                        m=m, n=n, k=k, algorithm=name,
                    )
            records.append(
                BenchRecord(m, n, k, ref_rate, gflops(m, n, k, alg_time), diff,
                            name, cfg.threads)
            )
    return records


@dataclass
class ShapeCheck:
    """Per-shape verification outcome."""

    m: int
    n: int
    k: int
    max_abs_diff: float
    tol: float
    ok: bool


def verify_algorithm(cfg: Config, name: str, shapes=None, registry=None):
    """Compare one algorithm against the oracle over a list of shapes.

    Returns (all_ok, [ShapeCheck...]).  Runs each shape once; no timing.
    """
    reg = default_registry() if registry is None else registry
    ref_engine = reg.build_engine(REF_ALGORITHM, cfg)
    engine = reg.build_engine(name, cfg)
    shapes = cfg.sweep_shapes() if shapes is None else list(shapes)
    checks = []
    for m, n, k in shapes:
        a, b, c0 = make_operands(cfg.seed, m, n, k)
        want = ref_engine(a, b, copy_matrix(c0))
        got = engine(a, b, copy_matrix(c0))
        tol = tolerance(k, float(np.abs(to_array(a)).max()),
                        float(np.abs(to_array(b)).max()))
        report = max_abs_diff(got, want, tol)
        checks.append(ShapeCheck(m, n, k, report.max_abs_diff, tol,
                                 report.first_bad_i is None))
    return all(ch.ok for ch in checks), checks


def _table_rows(records: list[BenchRecord]) -> list[str]:
    """Five right-aligned columns: m, n, k, reference GFLOPS, algorithm GFLOPS.

    Column widths adapt to the widest cell; separators are four spaces
    between the dimensions and two before each rate.
    """
    cells = [
        (str(r.m), str(r.n), str(r.k), f"{r.ref_gflops:.2f}", f"{r.alg_gflops:.2f}")
        for r in records
    ]
    widths = [max(len(row[col]) for row in cells) for col in range(5)]
    return [
        f"{r[0]:>{widths[0]}}    {r[1]:>{widths[1]}}    {r[2]:>{widths[2]}}"
        f"  {r[3]:>{widths[3]}}  {r[4]:>{widths[4]}}"
        for r in cells
    ]


def emit(records: list[BenchRecord], fmt: str, label: str = "results") -> str:
    """Render benchmark records as a table, CSV, or a MATLAB matrix literal."""
    if not records:
        raise ValueError("no records to emit")
    if fmt == "table":
        return "\n".join(_table_rows(records))
    if fmt == "csv":
        lines = ["m,n,k,ref_gflops,alg_gflops,max_abs_diff,algorithm,threads"]
        for r in records:
            diff = "" if r.max_abs_diff is None else repr(r.max_abs_diff)
            lines.append(
                f"{r.m},{r.n},{r.k},{r.ref_gflops!r},{r.alg_gflops!r},"
                f"{diff},{r.algorithm},{r.threads}"
            )
        return "\n".join(lines)
    if fmt == "matlab":
        body = "\n".join(_table_rows(records))
        return f"{label}=[\n{body}\n];"
    raise ValueError(f"unknown format {fmt!r}; choose from table, csv, matlab")


def tune(cfg: Config, grid: dict[str, list[int]], probe_size: int,
         registry=None, reps: int = 3, log=None) -> TuneResult:
    """Grid-search blocking parameters at one probe size.

    Every grid point (cartesian product over mr, nr, mc, kc, nc candidates;
    missing axes keep the configured value) is validated first: points that
    violate a parameter invariant, or whose cache blocks exceed the probe
    size, are skipped with a warning.  Each surviving point is timed
    (best-of-reps) and its result verified once against the oracle.  Best
    point wins on rate; exact ties prefer the smaller packed footprint
    mc*kc + kc*nc, then lexicographic parameters.
    """
    if probe_size < 1:
        raise ValueError(f"probe_size must be positive, got {probe_size}")
    log = sys.stderr if log is None else log
    reg = default_registry() if registry is None else registry
    base = cfg.goto
    axes = [grid.get(key, [getattr(base, key)]) for key in ("mr", "nr", "mc", "kc", "nc")]
    points = list(itertools.product(*axes))

    m = n = k = probe_size
    a, b, c0 = make_operands(cfg.seed, m, n, k)
    ref_engine = reg.build_engine(REF_ALGORITHM, cfg)
    want = ref_engine(a, b, copy_matrix(c0))
    tol = tolerance(k, float(np.abs(to_array(a)).max()),
                    float(np.abs(to_array(b)).max()))

    table: dict[tuple[int, int, int, int, int], float] = {}
    best_key = None
    best_rate = -1.0
    for mr, nr, mc, kc, nc in points:
        params = replace(base, mr=mr, nr=nr, mc=mc, kc=kc, nc=nc)
        bad = param_violations(params)
        if max(mc, kc, nc) > probe_size:
            bad.append(f"block sizes exceed probe size {probe_size}")
        if bad:
            print(
                f"tune: skipping mr={mr} nr={nr} mc={mc} kc={kc} nc={nc}: "
                + "; ".join(bad),
                file=log,
            )
            continue
        engine = reg.build_engine("goto", replace(cfg, goto=params))
        alg_time, got = _best_time(engine, a, b, c0, reps)
        report = max_abs_diff(got, want, tol)
        if report.first_bad_i is not None:
            raise VerificationError(
                failure_line(report.first_bad_i, report.first_bad_j,
                             report.value_got, report.value_expected),
                m=m, n=n, k=k, algorithm="goto",
            )
        rate = gflops(m, n, k, alg_time)
        key = (mr, nr, mc, kc, nc)
        table[key] = rate
        if _beats(rate, key, best_rate, best_key):
            best_rate, best_key = rate, key
    if best_key is None:
        raise ValueError("no valid grid points to tune over")
    best = replace(base, mr=best_key[0], nr=best_key[1], mc=best_key[2],
                   kc=best_key[3], nc=best_key[4])
    return TuneResult(best, best_rate, table, probe_size)


def _footprint(key) -> int:
    mr, nr, mc, kc, nc = key
    return mc * kc + kc * nc


def _beats(rate, key, best_rate, best_key) -> bool:
    if best_key is None or rate > best_rate:
        return True
    if rate < best_rate:
        return False
    return (_footprint(key), key) < (_footprint(best_key), best_key)
