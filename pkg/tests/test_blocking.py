"""Cache-blocking partitions, sub-views, and the blocked engine."""

import pytest

from gemmforge.blocking import BlockPartition, axis_blocks, gemm_blocked, sub_view
from gemmforge.kernels import gemm_naive, tolerance
from gemmforge.matrix import (
    alloc_matrix,
    copy_matrix,
    fill_random,
    matrix_from_rows,
    max_abs_diff,
    to_array,
)


def _problem(m, n, k, seed, ldpad=0):
    a = fill_random(alloc_matrix(m, k, m + ldpad), seed)
    b = fill_random(alloc_matrix(k, n, k + ldpad), seed + 1)
    c = fill_random(alloc_matrix(m, n, m + ldpad), seed + 2)
    return a, b, c


def test_axis_blocks_even_split():
    assert list(axis_blocks(8, 4)) == [(0, 4), (4, 4)]


def test_axis_blocks_ragged_tail():
    assert list(axis_blocks(10, 4)) == [(0, 4), (4, 4), (8, 2)]


def test_axis_blocks_oversized_block():
    assert list(axis_blocks(3, 100)) == [(0, 3)]


def test_axis_blocks_rejects_bad_args():
    with pytest.raises(ValueError):
        list(axis_blocks(0, 4))
    with pytest.raises(ValueError):
        list(axis_blocks(4, 0))


def test_partition_counts():
    part = BlockPartition(m=10, n=8, k=7, bm=4, bn=4, bk=3)
    assert part.row_count == 3
    assert part.col_count == 2
    assert part.depth_count == 3


def test_partition_tiles_cover_each_axis():
    part = BlockPartition(m=10, n=8, k=7, bm=4, bn=4, bk=3)
    for blocks, extent in (
        (list(part.row_blocks()), 10),
        (list(part.col_blocks()), 8),
        (list(part.depth_blocks()), 7),
    ):
        # contiguous, ascending, and summing to the axis extent
        assert blocks[0][0] == 0
        assert sum(size for _, size in blocks) == extent
        for (s0, z0), (s1, _) in zip(blocks, blocks[1:]):
            assert s1 == s0 + z0


def test_sub_view_full_window_is_parent():
    mat = fill_random(alloc_matrix(4, 3), 9)
    view = sub_view(mat, 0, 0, 4, 3)
    assert to_array(view).tolist() == to_array(mat).tolist()
    assert view.ld == mat.ld


def test_sub_view_shares_storage():
    mat = fill_random(alloc_matrix(5, 5, 5), 10)
    view = sub_view(mat, 2, 3, 1, 1)
    # element (2,3) with ld=5 lives at flat offset 3*5+2 = 17
    assert view.get(0, 0) == mat.data[17]
    view.set(0, 0, -4.5)
    assert mat.get(2, 3) == -4.5


def test_sub_view_window_validation():
    mat = alloc_matrix(4, 4)
    for i0, j0, mi, nj in ((0, 0, 5, 1), (0, 0, 1, 5), (4, 0, 1, 1), (-1, 0, 1, 1)):
        with pytest.raises(ValueError):
            sub_view(mat, i0, j0, mi, nj)


def test_sub_view_disjoint_windows_write_independently():
    mat = alloc_matrix(4, 4)
    left = sub_view(mat, 0, 0, 4, 2)
    right = sub_view(mat, 0, 2, 4, 2)
    for j in range(2):
        for i in range(4):
            left.set(i, j, 1.0)
            right.set(i, j, 2.0)
    want = [[1.0, 1.0, 2.0, 2.0]] * 4
    assert to_array(mat).tolist() == want


def test_blocked_bitwise_equal_to_naive_all_block_sizes(backend):
    a, b, c = _problem(8, 8, 8, seed=100)
    want = gemm_naive(a, b, copy_matrix(c), backend=backend)
    for bm in (1, 3, 4, 8, 11):
        for bn in (1, 3, 8):
            for bk in (1, 5, 8):
                got = gemm_blocked(
                    a, b, copy_matrix(c), bm, bn, bk, backend=backend
                )
                assert max_abs_diff(got, want).max_abs_diff == 0.0, (bm, bn, bk)


def test_blocked_degenerate_blocks_equal_whole_problem(backend):
    a, b, c = _problem(6, 5, 4, seed=110)
    want = gemm_naive(a, b, copy_matrix(c), backend=backend)
    got = gemm_blocked(a, b, copy_matrix(c), 6, 5, 4, backend=backend)
    assert max_abs_diff(got, want).max_abs_diff == 0.0


def test_blocked_ragged_within_tolerance(backend):
    a, b, c = _problem(7, 5, 9, seed=120, ldpad=2)
    want = gemm_naive(a, b, copy_matrix(c), backend=backend)
    got = gemm_blocked(a, b, copy_matrix(c), 4, 4, 4, backend=backend)
    assert max_abs_diff(got, want).max_abs_diff <= tolerance(9, 1.0, 1.0)


def test_blocked_inner_register_tiled_bitwise(backend):
    a, b, c = _problem(9, 7, 6, seed=130)
    want = gemm_naive(a, b, copy_matrix(c), backend=backend)
    got = gemm_blocked(
        a, b, copy_matrix(c), 4, 4, 3, inner="register_tiled", backend=backend
    )
    # register-tiled inner keeps the same per-element accumulation order
    assert max_abs_diff(got, want).max_abs_diff == 0.0


def test_blocked_inner_colwise_bitwise(backend):
    a, b, c = _problem(5, 6, 7, seed=140)
    want = gemm_naive(a, b, copy_matrix(c), backend=backend)
    got = gemm_blocked(a, b, copy_matrix(c), 2, 3, 4, inner="colwise", backend=backend)
    assert max_abs_diff(got, want).max_abs_diff == 0.0


def test_blocked_unknown_inner():
    a, b, c = _problem(4, 4, 4, seed=150)
    with pytest.raises(ValueError, match="inner"):
        gemm_blocked(a, b, c, 2, 2, 2, inner="strassen")


def test_blocked_callable_inner():
    calls = []

    def spy_inner(a, b, c, backend=None):
        calls.append((a.m, b.n, a.n))
        return gemm_naive(a, b, c)

    a, b, c = _problem(4, 4, 4, seed=160)
    want = gemm_naive(a, b, copy_matrix(c))
    got = gemm_blocked(a, b, copy_matrix(c), 2, 2, 2, inner=spy_inner)
    assert max_abs_diff(got, want).max_abs_diff == 0.0
    assert len(calls) == 8  # 2x2x2 block grid
    assert all(call == (2, 2, 2) for call in calls)


def test_blocked_rejects_bad_blocks():
    a, b, c = _problem(4, 4, 4, seed=170)
    with pytest.raises(ValueError):
        gemm_blocked(a, b, c, 0, 2, 2)


def test_blocked_identity_exact():
    a = matrix_from_rows([[1.0, 2.0], [3.0, 4.0]])
    eye = matrix_from_rows([[1.0, 0.0], [0.0, 1.0]])
    got = gemm_blocked(a, eye, alloc_matrix(2, 2), 1, 1, 1)
    assert to_array(got).tolist() == [[1.0, 2.0], [3.0, 4.0]]
