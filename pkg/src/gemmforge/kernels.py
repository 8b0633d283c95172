"""Unblocked GEMM engines and the micro-kernel building blocks.

All engines compute C := A*B + C on column-major matrices and share one
accumulation-order contract: element (i, j) of C gathers its k products in
ascending p order, one rounded multiply and one rounded add per product.
Because the order never changes, gemm_naive, gemm_colwise and
gemm_register_tiled agree bitwise, on either backend.
"""

from __future__ import annotations

import numpy as np

from .backends import resolve
from .matrix import Matrix

__all__ = [
    "MAX_TILE",
    "tolerance",
    "MicroTile",
    "gemm_naive",
    "gemm_colwise",
    "gemm_register_tiled",
    "rank1_update",
    "micro_kernel",
]

MAX_TILE = 12  # register tiles are configurable 1..MAX_TILE per axis


def tolerance(k: int, a_max: float, b_max: float) -> float:
    """Comparison bound for engines that only reorder the k-term sums.

    2**-50 * k * max|A| * max|B|: roughly k units in the last place of the
    largest possible partial sum, with slack since only summation order may
    differ between engines.
    """
    return 2.0**-50 * k * a_max * b_max


def check_conformal(a: Matrix, b: Matrix, c: Matrix) -> tuple[int, int, int]:
    """Validate C(m,n) := A(m,k) * B(k,n) + C and return (m, n, k)."""
    if a.n != b.m:
        raise ValueError(f"inner dims differ: A is {a.m}x{a.n}, B is {b.m}x{b.n}")
    if c.m != a.m or c.n != b.n:
        raise ValueError(
            f"C is {c.m}x{c.n}, expected {a.m}x{b.n} from A {a.m}x{a.n} * B {b.m}x{b.n}"
        )
    return a.m, b.n, a.n


def gemm_naive(a: Matrix, b: Matrix, c: Matrix, backend=None) -> Matrix:
    """Triple loop ordered i, j, p.  Slow and obviously right; every other
    engine is judged against it."""
    m, n, k = check_conformal(a, b, c)
    bk = resolve(backend)
    bk.naive(a.data, a.ld, b.data, b.ld, c.data, c.ld, m, n, k)
    return c


def gemm_colwise(a: Matrix, b: Matrix, c: Matrix, backend=None) -> Matrix:
    """Triple loop reordered j, p, i so the inner loop runs down one column of
    C and A at unit stride.  Bitwise equal to gemm_naive."""
    m, n, k = check_conformal(a, b, c)
    bk = resolve(backend)
    bk.colwise(a.data, a.ld, b.data, b.ld, c.data, c.ld, m, n, k)
    return c


def gemm_register_tiled(a: Matrix, b: Matrix, c: Matrix, mr: int = 4, nr: int = 4,
                        backend=None) -> Matrix:
    """C updated one mr x nr tile at a time through a local accumulator.

    Tiles load C once, accumulate all k rank-1 contributions in ascending p
    order, and store once.  Fringe tiles are handled with a zero-padded
    temporary whose writeback touches only valid elements.  Bitwise equal to
    gemm_naive for every tile shape.
    """
    m, n, k = check_conformal(a, b, c)
    _check_tile(mr, nr)
    bk = resolve(backend)
    bk.register_tiled(a.data, a.ld, b.data, b.ld, c.data, c.ld, m, n, k, mr, nr)
    return c


def _check_tile(mr: int, nr: int) -> None:
    if not (1 <= mr <= MAX_TILE and 1 <= nr <= MAX_TILE):
        raise ValueError(f"tile {mr}x{nr} outside supported range 1..{MAX_TILE}")


class MicroTile:
    """mr x nr column-major accumulator that models the kernel register block."""

    __slots__ = ("mr", "nr", "acc")

    def __init__(self, mr: int, nr: int):
        _check_tile(mr, nr)
        self.mr = mr
        self.nr = nr
        self.acc = np.zeros(mr * nr, dtype=np.float64)

    def get(self, i: int, j: int) -> float:
        return float(self.acc[j * self.mr + i])

    def load(self, c: Matrix) -> None:
        """Load the tile from the top-left mr x nr region of c."""
        for j in range(self.nr):
            self.acc[j * self.mr : j * self.mr + self.mr] = c.data[
                j * c.ld : j * c.ld + self.mr
            ]

    def store(self, c: Matrix) -> None:
        for j in range(self.nr):
            c.data[j * c.ld : j * c.ld + self.mr] = self.acc[
                j * self.mr : j * self.mr + self.mr
            ]


def rank1_update(tile: MicroTile, a_col, b_row, backend=None) -> MicroTile:
    """tile(i, j) += a_col(i) * b_row(j), one multiply and one add each."""
    a_col = np.ascontiguousarray(a_col, dtype=np.float64)
    b_row = np.ascontiguousarray(b_row, dtype=np.float64)
    if a_col.size != tile.mr or b_row.size != tile.nr:
        raise ValueError(
            f"rank-1 operands {a_col.size}/{b_row.size} do not match tile "
            f"{tile.mr}x{tile.nr}"
        )
    bk = resolve(backend)
    bk.rank1(tile.acc, a_col, b_row, tile.mr, tile.nr)
    return tile


def micro_kernel(kc: int, a_panel, b_panel, c: Matrix, backend=None) -> Matrix:
    """kc rank-1 updates from packed panels, accumulated into an mr x nr C tile.

    a_panel is kc contiguous length-mr columns, b_panel kc contiguous
    length-nr rows, as produced by the packing routines.  The tile shape is
    taken from c.  Accumulation runs p = 0..kc-1, so the result is bitwise
    equal to the naive sub-GEMM on the unpacked operands.
    """
    mr, nr = c.m, c.n
    _check_tile(mr, nr)
    a_panel = np.ascontiguousarray(a_panel, dtype=np.float64)
    b_panel = np.ascontiguousarray(b_panel, dtype=np.float64)
    if kc < 1:
        raise ValueError(f"kc must be positive, got {kc}")
    if a_panel.size != kc * mr:
        raise ValueError(f"A panel has {a_panel.size} elements, expected kc*mr={kc * mr}")
    if b_panel.size != kc * nr:
        raise ValueError(f"B panel has {b_panel.size} elements, expected kc*nr={kc * nr}")
    bk = resolve(backend)
    bk.micro_kernel(kc, a_panel, b_panel, c.data, c.ld, mr, nr, mr, nr)
    return c
