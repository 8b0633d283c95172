"""Deterministic parallel execution: planning, bitwise equality, census."""

import threading

import pytest

from gemmforge.goto import GotoParams, gemm_goto, new_stats
from gemmforge.matrix import alloc_matrix, copy_matrix, fill_random, max_abs_diff
from gemmforge.parallel import (
    MAX_THREADS,
    ParallelPlan,
    gemm_goto_parallel,
    make_plan,
    split_range,
)


def _problem(m, n, k, seed, ldpad=0):
    a = fill_random(alloc_matrix(m, k, m + ldpad), seed)
    b = fill_random(alloc_matrix(k, n, k + ldpad), seed + 1)
    c = fill_random(alloc_matrix(m, n, m + ldpad), seed + 2)
    return a, b, c


# ------------------------------------------------------------------ planning


def test_split_range_even():
    assert split_range(8, 4) == ((0, 2), (2, 4), (4, 6), (6, 8))


def test_split_range_remainder_goes_to_earlier_workers():
    assert split_range(10, 4) == ((0, 3), (3, 6), (6, 8), (8, 10))


def test_split_range_more_workers_than_work():
    assert split_range(2, 3) == ((0, 1), (1, 2), (2, 2))


def test_split_range_single_worker():
    assert split_range(5, 1) == ((0, 5),)


def test_split_range_zero_count():
    assert split_range(0, 2) == ((0, 0), (0, 0))


def test_split_range_validation():
    with pytest.raises(ValueError):
        split_range(-1, 2)
    with pytest.raises(ValueError):
        split_range(4, 0)


def test_make_plan_jr_single_thread():
    plan = make_plan("jr", 1, 48, 4)
    assert plan.partition == ((0, 12),)


def test_make_plan_ic_three_workers():
    # 100 rows in mc=64 blocks: 2 blocks over 3 workers, last one idle
    plan = make_plan("ic", 3, 100, 64)
    assert plan.partition == ((0, 1), (1, 2), (2, 2))


def test_make_plan_jr_even_panels():
    plan = make_plan("jr", 4, 4096, 4)
    sizes = [hi - lo for lo, hi in plan.partition]
    assert sizes == [256, 256, 256, 256]


def test_plan_validation():
    with pytest.raises(ValueError, match="loop"):
        ParallelPlan("pc", 2)
    with pytest.raises(ValueError, match="threads"):
        ParallelPlan("ic", 0)
    with pytest.raises(ValueError, match="threads"):
        ParallelPlan("ic", MAX_THREADS + 1)
    with pytest.raises(ValueError, match="partition"):
        ParallelPlan("ic", 2, ((0, 1),))
    with pytest.raises(ValueError, match="contiguous"):
        ParallelPlan("ic", 2, ((0, 1), (2, 3)))


# ----------------------------------------------------------- bitwise equality


PARAMS = GotoParams(mr=2, nr=2, mc=4, kc=8, nc=6)

SHAPES = (
    (1, 1, 1),
    (3, 17, 5),
    (8, 8, 8),
    (13, 11, 17),
    (16, 5, 9),
    (23, 29, 19),
    (31, 33, 32),
    (40, 40, 40),
    (7, 64, 3),
    (64, 7, 64),
)


@pytest.mark.parametrize("loop", ["ic", "jr"])
@pytest.mark.parametrize("threads", [1, 2, 3, 4, 8])
def test_parallel_bitwise_equals_serial(loop, threads):
    for idx, (m, n, k) in enumerate(SHAPES):
        a, b, c = _problem(m, n, k, seed=400 + idx, ldpad=idx % 3)
        want = gemm_goto(a, b, copy_matrix(c), PARAMS)
        extent, step = (m, PARAMS.mc) if loop == "ic" else (n, PARAMS.nr)
        plan = make_plan(loop, threads, extent, step)
        got = gemm_goto_parallel(a, b, copy_matrix(c), PARAMS, plan)
        assert max_abs_diff(got, want).max_abs_diff == 0.0, (loop, threads, m, n, k)


def test_parallel_none_plan_defaults_to_serial_single_thread():
    a, b, c = _problem(9, 9, 9, seed=500)
    want = gemm_goto(a, b, copy_matrix(c), PARAMS)
    got = gemm_goto_parallel(a, b, copy_matrix(c), PARAMS)
    assert max_abs_diff(got, want).max_abs_diff == 0.0


def test_parallel_repeated_runs_identical():
    a, b, c = _problem(17, 23, 11, seed=510)
    plan = make_plan("ic", 4, 17, PARAMS.mc)
    one = gemm_goto_parallel(a, b, copy_matrix(c), PARAMS, plan)
    two = gemm_goto_parallel(a, b, copy_matrix(c), PARAMS, plan)
    assert max_abs_diff(one, two).max_abs_diff == 0.0


# ----------------------------------------------------------------- the census


def _census_run(loop, threads, m, n, k, seed=600):
    a, b, c = _problem(m, n, k, seed)
    extent, step = (m, PARAMS.mc) if loop == "ic" else (n, PARAMS.nr)
    plan = make_plan(loop, threads, extent, step)
    census = []
    gemm_goto_parallel(a, b, c, PARAMS, plan, census=census)
    return census, m, n, k


@pytest.mark.parametrize("loop", ["ic", "jr"])
def test_census_exactly_one_writer_per_element(loop):
    census, m, n, k = _census_run(loop, 3, 13, 11, 17)
    writers = {}
    for offset, worker in census:
        writers.setdefault(offset, set()).add(worker)
    # each store lands k/kc times (once per pc block), all by one worker
    assert all(len(ws) == 1 for ws in writers.values())
    assert len(writers) == m * n


def test_census_covers_every_element_no_padding():
    m, n, k = 7, 5, 9
    a, b, c = _problem(m, n, k, seed=610, ldpad=2)
    plan = make_plan("ic", 2, m, PARAMS.mc)
    census = []
    gemm_goto_parallel(a, b, c, PARAMS, plan, census=census)
    offsets = {off for off, _ in census}
    want = {j * c.ld + i for j in range(n) for i in range(m)}
    assert offsets == want  # full coverage, nothing in padding rows


def test_census_ic_workers_own_disjoint_row_blocks():
    census, m, n, k = _census_run("ic", 2, 16, 6, 4)
    # mc=4: worker 0 owns row blocks 0..1 (rows 0..7), worker 1 rows 8..15
    for offset, worker in census:
        i = offset % 16
        assert worker == (0 if i < 8 else 1)


def test_parallel_work_conservation():
    a, b, c = _problem(19, 21, 23, seed=620)
    serial = new_stats()
    gemm_goto(a, b, copy_matrix(c), PARAMS, stats=serial)
    for loop in ("ic", "jr"):
        extent, step = (19, PARAMS.mc) if loop == "ic" else (21, PARAMS.nr)
        plan = make_plan(loop, 3, extent, step)
        par = new_stats()
        gemm_goto_parallel(a, b, copy_matrix(c), PARAMS, plan, stats=par)
        assert par["micro_tiles"] == serial["micro_tiles"], loop


def test_parallel_pack_counts_ic():
    # ic mode: B packed once per (jc, pc) by worker 0; every worker packs
    # its own share of A blocks, so totals match the serial formula
    m, n, k = 16, 12, 16
    a, b, c = _problem(m, n, k, seed=630)
    serial = new_stats()
    gemm_goto(a, b, copy_matrix(c), PARAMS, stats=serial)
    plan = make_plan("ic", 2, m, PARAMS.mc)
    par = new_stats()
    gemm_goto_parallel(a, b, copy_matrix(c), PARAMS, plan, stats=par)
    assert par["pack_b"] == serial["pack_b"]
    assert par["pack_a"] == serial["pack_a"]


def test_parallel_pack_counts_jr():
    # jr mode: worker 0 packs both shared buffers, same counts as serial
    m, n, k = 16, 12, 16
    a, b, c = _problem(m, n, k, seed=640)
    serial = new_stats()
    gemm_goto(a, b, copy_matrix(c), PARAMS, stats=serial)
    plan = make_plan("jr", 3, n, PARAMS.nr)
    par = new_stats()
    gemm_goto_parallel(a, b, copy_matrix(c), PARAMS, plan, stats=par)
    assert par["pack_b"] == serial["pack_b"]
    assert par["pack_a"] == serial["pack_a"]


# ------------------------------------------------------------------- errors


def test_parallel_worker_error_propagates():
    a, b, c = _problem(8, 8, 8, seed=650)
    plan = make_plan("ic", 2, 8, PARAMS.mc)

    def broken_kernel(kc, mr, nr, a_panel, b_panel, acc):
        raise RuntimeError("kernel exploded")

    params = PARAMS.with_(micro_kernel="broken_for_test")
    # custom kernels are restricted to the serial engine
    with pytest.raises(ValueError):
        gemm_goto_parallel(a, b, c, params, plan)


def test_parallel_error_inside_worker_reraises():
    # an exploding census sink fails inside worker threads; the error must
    # surface in the caller instead of hanging the barrier
    class Exploding(list):
        def append(self, item):
            raise RuntimeError("census sink failed")

    a, b, c = _problem(8, 8, 8, seed=655)
    plan = make_plan("ic", 2, 8, PARAMS.mc)
    with pytest.raises(RuntimeError, match="census sink failed"):
        gemm_goto_parallel(a, b, c, PARAMS, plan, census=Exploding())


def test_parallel_thread_count_spawns_no_leak():
    before = threading.active_count()
    a, b, c = _problem(12, 12, 12, seed=660)
    plan = make_plan("jr", 4, 12, PARAMS.nr)
    gemm_goto_parallel(a, b, c, PARAMS, plan)
    assert threading.active_count() == before  # workers joined
