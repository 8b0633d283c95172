"""Cache blocking: partition a GEMM into block sub-problems over matrix views.

The block loop nest is fixed: j-blocks outer, p-blocks middle, i-blocks
inner.  Each (i, j) element of C receives its p-block contributions in
ascending order and the inner engine accumulates ascending within a block,
so blocking preserves the per-element accumulation order exactly; with any
order-preserving inner engine the result is bitwise equal to gemm_naive for
every block size choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

from .kernels import check_conformal, gemm_colwise, gemm_naive, gemm_register_tiled
from .matrix import Matrix

__all__ = ["BlockPartition", "axis_blocks", "sub_view", "gemm_blocked"]


def axis_blocks(extent: int, block: int):
    """Yield (start, size) covering 0..extent-1 by blocks of the given size.

    All blocks have the nominal size except a possibly smaller final block
    when the extent is not a multiple (ragged tail).
    """
    if extent < 1:
        raise ValueError(f"extent must be >= 1, got {extent}")
    if block < 1:
        raise ValueError(f"block must be >= 1, got {block}")
    for start in range(0, extent, block):
        yield start, min(block, extent - start)


@dataclass(frozen=True)
class BlockPartition:
    """Partition of one GEMM problem into bm x bn x bk blocks.

    Block (i, j, p) covers rows [i*bm, i*bm + m_i), columns
    [j*bn, j*bn + n_j) and depth [p*bk, p*bk + k_p) where each extent is
    min(block, remainder), always >= 1; the blocks tile the problem exactly
    once per axis.
    """

    m: int
    n: int
    k: int
    bm: int
    bn: int
    bk: int

    def __post_init__(self):
        for name in ("m", "n", "k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("bm", "bn", "bk"):
            if getattr(self, name) < 1:
                raise ValueError(
                    f"block size {name} must be positive, got {getattr(self, name)}"
                )

    @property
    def row_count(self) -> int:
        return -(-self.m // self.bm)

    @property
    def col_count(self) -> int:
        return -(-self.n // self.bn)

    @property
    def depth_count(self) -> int:
        return -(-self.k // self.bk)

    def row_blocks(self):
        return axis_blocks(self.m, self.bm)

    def col_blocks(self):
        return axis_blocks(self.n, self.bn)

    def depth_blocks(self):
        return axis_blocks(self.k, self.bk)


def sub_view(mat: Matrix, i0: int, j0: int, mi: int, nj: int) -> Matrix:
    """mi x nj view of mat starting at (i0, j0); shares the parent buffer.

    Views keep the parent leading dimension, so kernels run on them
    unchanged.  Raises when the window is empty or leaves the matrix.
    """
    if mi < 1 or nj < 1:
        raise ValueError(f"view dims must be positive, got {mi}x{nj}")
    if i0 < 0 or j0 < 0 or i0 + mi > mat.m or j0 + nj > mat.n:
        raise ValueError(
            f"view [{i0}:{i0 + mi}, {j0}:{j0 + nj}] outside {mat.m}x{mat.n}"
        )
    return Matrix(mi, nj, mat.ld, mat.data[j0 * mat.ld + i0 :])


_INNER = {
    "naive": gemm_naive,
    "colwise": gemm_colwise,
    "register_tiled": gemm_register_tiled,
}


def gemm_blocked(a: Matrix, b: Matrix, c: Matrix, bm: int, bn: int, bk: int,
                 inner="naive", backend=None) -> Matrix:
    """C := A*B + C over bm x bn x bk blocks, delegating each block product.

    inner names one of the unblocked engines (naive, colwise,
    register_tiled) or is a callable f(a_view, b_view, c_view).  Ragged
    edges fall out of the partition arithmetic; no shape restrictions.
    """
    m, n, k = check_conformal(a, b, c)
    if isinstance(inner, str):
        if inner not in _INNER:
            raise ValueError(
                f"unknown inner engine {inner!r}; choose from {sorted(_INNER)}"
            )
        inner_fn = partial(_INNER[inner], backend=backend)
    elif callable(inner):
        inner_fn = inner
    else:
        raise ValueError(f"inner must be a name or callable, got {type(inner).__name__}")
    part = BlockPartition(m, n, k, bm, bn, bk)
    for j0, nj in part.col_blocks():
        for p0, kp in part.depth_blocks():
            for i0, mi in part.row_blocks():
                inner_fn(
                    sub_view(a, i0, p0, mi, kp),
                    sub_view(b, p0, j0, kp, nj),
                    sub_view(c, i0, j0, mi, nj),
                )
    return c
