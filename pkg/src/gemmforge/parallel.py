"""Deterministic thread parallelism for the five-loop engine.

Either loop 3 (ic, blocks of C rows) or loop 2 (jr, micro-panel columns) is
parallelized; the pc loop never is, because its iterations all accumulate
into the same C elements and running them concurrently would both race and
reorder the sums.  Work is split statically: iteration indices are divided
into contiguous, balanced, worker-ordered ranges, so every C element has
exactly one writer and accumulates in exactly the serial order.  Results are
therefore bitwise identical to gemm_goto for any thread count.

Under ic parallelism each worker packs its own A blocks into a private
buffer; the shared B pack is done by worker 0 with a barrier before use.
Under jr parallelism worker 0 packs both shared buffers, with a barrier
before the compute phase and one after, so the next pack never overwrites
panels still being read.

The pure-Python backend carries write-census instrumentation: pass a list as
census and every C store is recorded as (flat_offset, worker).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from . import _pykernels
from .backends import get_backend, resolve
from .goto import GotoParams, param_violations
from .kernels import check_conformal
from .matrix import Matrix, aligned_zeros

__all__ = ["MAX_THREADS", "ParallelPlan", "make_plan", "split_range", "gemm_goto_parallel"]

MAX_THREADS = 256

_LOOPS = ("ic", "jr")


def split_range(count: int, workers: int) -> tuple[tuple[int, int], ...]:
    """Split iteration indices 0..count-1 into contiguous balanced ranges.

    Worker w receives ceil(count/workers) or floor(count/workers) indices;
    earlier workers take the larger share.  Workers past the supply get
    empty ranges.  The split depends only on (count, workers).
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")
    base, rem = divmod(count, workers)
    out = []
    lo = 0
    for w in range(workers):
        hi = lo + base + (1 if w < rem else 0)
        out.append((lo, hi))
        lo = hi
    return tuple(out)


@dataclass(frozen=True)
class ParallelPlan:
    """Static assignment of one parallelized loop to a fixed worker pool.

    partition holds per-worker (lo, hi) iteration-index ranges for the
    chosen loop, as produced by split_range; None lets the engine derive
    ranges itself (always the case for jr plans on multi-panel problems,
    where the range count varies per jc block).
    """

    loop: str
    threads: int
    partition: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.loop not in _LOOPS:
            raise ValueError(f"loop must be one of {_LOOPS}, got {self.loop!r}")
        if not 1 <= self.threads <= MAX_THREADS:
            raise ValueError(
                f"threads={self.threads} outside supported range 1..{MAX_THREADS}"
            )
        if self.partition is not None:
            if len(self.partition) != self.threads:
                raise ValueError(
                    f"partition has {len(self.partition)} ranges for "
                    f"{self.threads} threads"
                )
            prev = 0
            for lo, hi in self.partition:
                if lo != prev or hi < lo:
                    raise ValueError("partition ranges must be contiguous and ascending")
                prev = hi


def make_plan(loop: str, threads: int, extent: int, step: int) -> ParallelPlan:
    """Plan for parallelizing `loop` over an axis of the given extent.

    extent is the axis length the loop walks (m for ic, n for jr) and step
    its stride (mc for ic, nr for jr).
    """
    if extent < 1:
        raise ValueError(f"extent must be positive, got {extent}")
    if step < 1:
        raise ValueError(f"step must be positive, got {step}")
    count = -(-extent // step)
    return ParallelPlan(loop, threads, split_range(count, threads))


def gemm_goto_parallel(a: Matrix, b: Matrix, c: Matrix, params: GotoParams | None = None,
                       plan: ParallelPlan | None = None, backend=None,
                       stats: dict | None = None, census: list | None = None) -> Matrix:
    """Five-loop packed GEMM with one loop run by a fixed thread pool.

    Bitwise equal to gemm_goto for any plan.  census (a list) activates the
    pure-backend write instrumentation and forces the pure backend.
    """
    if params is None:
        params = GotoParams()
    if plan is None:
        plan = ParallelPlan("ic", 1)
    bad = param_violations(params)
    if bad:
        raise ValueError("invalid blocking parameters: " + "; ".join(bad))
    if params.micro_kernel != "scalar":
        raise ValueError("parallel execution supports the built-in scalar kernel only")
    m, n, k = check_conformal(a, b, c)
    bk = get_backend("python") if census is not None else resolve(backend)
    mr, nr, mc, kc, nc = params.as_tuple()
    T = plan.threads

    ic_count = -(-m // mc)
    if plan.loop == "ic":
        if plan.partition is not None and len(plan.partition) == T:
            ranges_ic = (
                plan.partition
                if plan.partition[-1][1] == ic_count
                else split_range(ic_count, T)
            )
        else:
            ranges_ic = split_range(ic_count, T)

    kc_buf = min(kc, k)
    bpack = aligned_zeros(-(-min(nc, n) // nr) * nr * kc_buf)
    apack_len = -(-min(mc, m) // mr) * mr * kc_buf
    if plan.loop == "ic":
        apacks = [aligned_zeros(apack_len) for _ in range(T)]
    else:
        apack = aligned_zeros(apack_len)

    barrier = threading.Barrier(T)
    worker_stats = [dict() for _ in range(T)]
    errors: list[BaseException | None] = [None] * T

    def bump(st, key, by=1):
        st[key] = st.get(key, 0) + by

    def block_call(w, cview, base, mcp, ncp, kcp, jr_lo, jr_hi, abuf):
        if census is not None:
            _pykernels.goto_block_census(
                abuf, bpack, cview, c.ld, mcp, ncp, kcp, mr, nr, jr_lo, jr_hi,
                base, w, census,
            )
        else:
            bk.goto_block(abuf, bpack, cview, c.ld, mcp, ncp, kcp, mr, nr, jr_lo, jr_hi)
        bump(worker_stats[w], "micro_tiles", (jr_hi - jr_lo) * (-(-mcp // mr)))

    def run_ic(w):
        lo, hi = ranges_ic[w]
        st = worker_stats[w]
        for jc in range(0, n, nc):
            ncp = min(nc, n - jc)
            jr_panels = -(-ncp // nr)
            for pc in range(0, k, kc):
                kcp = min(kc, k - pc)
                if w == 0:
                    bk.pack_b(b.data[jc * b.ld + pc :], b.ld, kcp, ncp, nr, bpack)
                    bump(st, "pack_b")
                barrier.wait()  # B pack visible to all workers
                for t in range(lo, hi):
                    ic = t * mc
                    mcp = min(mc, m - ic)
                    bk.pack_a(a.data[pc * a.ld + ic :], a.ld, mcp, kcp, mr, apacks[w])
                    bump(st, "pack_a")
                    block_call(
                        w, c.data[jc * c.ld + ic :], jc * c.ld + ic,
                        mcp, ncp, kcp, 0, jr_panels, apacks[w],
                    )
                barrier.wait()  # everyone done before B is repacked

    def run_jr(w):
        st = worker_stats[w]
        for jc in range(0, n, nc):
            ncp = min(nc, n - jc)
            jr_panels = -(-ncp // nr)
            if plan.partition is not None and plan.partition[-1][1] == jr_panels:
                lo, hi = plan.partition[w]
            else:
                lo, hi = split_range(jr_panels, T)[w]
            for pc in range(0, k, kc):
                kcp = min(kc, k - pc)
                if w == 0:
                    bk.pack_b(b.data[jc * b.ld + pc :], b.ld, kcp, ncp, nr, bpack)
                    bump(st, "pack_b")
                for ic in range(0, m, mc):
                    mcp = min(mc, m - ic)
                    if w == 0:
                        bk.pack_a(a.data[pc * a.ld + ic :], a.ld, mcp, kcp, mr, apack)
                        bump(st, "pack_a")
                    barrier.wait()  # packed A and B ready
                    if hi > lo:
                        block_call(
                            w, c.data[jc * c.ld + ic :], jc * c.ld + ic,
                            mcp, ncp, kcp, lo, hi, apack,
                        )
                    barrier.wait()  # compute done before the next pack

    target = run_ic if plan.loop == "ic" else run_jr

    def guarded(w):
        try:
            target(w)
        except BaseException as e:  # re-raised in the caller
            errors[w] = e
            barrier.abort()

    if T == 1:
        guarded(0)
    else:
        threads = [
            threading.Thread(target=guarded, args=(w,), name=f"gemmforge-w{w}")
            for w in range(T)
        ]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    for e in errors:
        if e is not None and not isinstance(e, threading.BrokenBarrierError):
            raise e
    if stats is not None:
        for st in worker_stats:
            for key, val in st.items():
                stats[key] = stats.get(key, 0) + val
    return c
