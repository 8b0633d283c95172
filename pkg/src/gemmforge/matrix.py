"""Column-major matrix storage plus the measurement helpers shared by every engine.

A matrix is a dense float64 buffer in column-major order: element (i, j) lives
at flat offset j*ld + i, where ld is the leading dimension of the enclosing
storage.  ld may exceed the row count m; the padding rows between columns are
never read or written by any routine in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Matrix",
    "DiffReport",
    "map_index",
    "alloc_matrix",
    "aligned_zeros",
    "copy_matrix",
    "to_array",
    "matrix_from_rows",
    "identity",
    "fill_random",
    "max_abs_diff",
    "flop_count",
    "gflops",
]

ALIGNMENT = 64  # bytes; buffers start on a cache-line boundary


def map_index(i: int, j: int, ld: int) -> int:
    """Flat column-major offset of element (i, j) under leading dimension ld."""
    return j * ld + i


class Matrix:
    """Dense column-major float64 matrix over an explicit leading dimension.

    data holds at least ld*(n-1) + m elements; a full allocation holds ld*n.
    Views produced by sub-matrix slicing share the parent's buffer, so the
    tail view of a bottom-right corner can be shorter than ld*n.
    """

    __slots__ = ("m", "n", "ld", "data")

    def __init__(self, m: int, n: int, ld: int, data: np.ndarray):
        if m < 1 or n < 1:
            raise ValueError(f"matrix dims must be positive, got m={m} n={n}")
        if ld < m:
            raise ValueError(f"leading dimension ld={ld} smaller than row count m={m}")
        if not isinstance(data, np.ndarray) or data.dtype != np.float64 or data.ndim != 1:
            raise ValueError("data must be a 1-D float64 ndarray")
        if not data.flags.c_contiguous:
            raise ValueError("data must be contiguous")
        if data.size < ld * (n - 1) + m:
            raise ValueError(
                f"buffer too small: need {ld * (n - 1) + m} elements, got {data.size}"
            )
        self.m = m
        self.n = n
        self.ld = ld
        self.data = data

    def index(self, i: int, j: int) -> int:
        return j * self.ld + i

    def get(self, i: int, j: int) -> float:
        self._check(i, j)
        return float(self.data[j * self.ld + i])

    def set(self, i: int, j: int, value: float) -> None:
        self._check(i, j)
        self.data[j * self.ld + i] = value

    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError(f"({i}, {j}) out of range for {self.m}x{self.n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    def __repr__(self) -> str:
        return f"Matrix(m={self.m}, n={self.n}, ld={self.ld})"


@dataclass
class DiffReport:
    """Result of comparing two conformal matrices element by element.

    first_bad_* and the value pair are set iff some |got - want| exceeds the
    tolerance handed to max_abs_diff; the first offender in column-major scan
    order is recorded.
    """

    max_abs_diff: float
    first_bad_i: int | None = None
    first_bad_j: int | None = None
    value_got: float | None = None
    value_expected: float | None = None

    @property
    def clean(self) -> bool:
        return self.first_bad_i is None


def aligned_zeros(count: int, alignment: int = ALIGNMENT) -> np.ndarray:
    """Zeroed float64 buffer whose first element sits on an alignment-byte boundary."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    extra = alignment // 8
    raw = np.zeros(count + extra, dtype=np.float64)
    offset = (-raw.ctypes.data) % alignment // 8
    return raw[offset : offset + count]


def alloc_matrix(m: int, n: int, ld: int | None = None) -> Matrix:
    """Allocate an m x n matrix (ld defaults to m) backed by an aligned zero buffer."""
    if ld is None:
        ld = m
    if m < 1 or n < 1:
        raise ValueError(f"matrix dims must be positive, got m={m} n={n}")
    if ld < m:
        raise ValueError(f"leading dimension ld={ld} smaller than row count m={m}")
    return Matrix(m, n, ld, aligned_zeros(ld * n))


def copy_matrix(mat: Matrix) -> Matrix:
    """Deep copy preserving m, n and ld; padding in the copy stays zero."""
    out = alloc_matrix(mat.m, mat.n, mat.ld)
    for j in range(mat.n):
        src = mat.data[j * mat.ld : j * mat.ld + mat.m]
        out.data[j * out.ld : j * out.ld + out.m] = src
    return out


def to_array(mat: Matrix) -> np.ndarray:
    """Copy the valid m x n region into a fresh 2-D array (padding excluded)."""
    out = np.empty((mat.m, mat.n), dtype=np.float64)
    for j in range(mat.n):
        out[:, j] = mat.data[j * mat.ld : j * mat.ld + mat.m]
    return out


def matrix_from_rows(rows, ld: int | None = None) -> Matrix:
    """Build a matrix from a row-major nested sequence."""
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("rows must form a 2-D table")
    m, n = arr.shape
    out = alloc_matrix(m, n, ld)
    for j in range(n):
        out.data[j * out.ld : j * out.ld + m] = arr[:, j]
    return out


def identity(n: int, ld: int | None = None) -> Matrix:
    out = alloc_matrix(n, n, ld)
    for i in range(n):
        out.data[i * out.ld + i] = 1.0
    return out


# splitmix64 in counter mode ("splitmix64-v1"): element t of the fill is the
# splitmix64 output for state seed + (t+1)*GAMMA.  Pure integer arithmetic mod
# 2**64, so the stream is identical on every platform and trivially
# vectorizable; any element can be produced without generating its
# predecessors.
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = 0xFFFFFFFFFFFFFFFF


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def random_values(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Elements start..start+count-1 of the splitmix64-v1 stream, mapped to [-1, 1).

    The top 53 bits of each mixed word become a dyadic rational in [0, 1),
    then scale to [-1, 1).  Every value is representable exactly until the
    final subtraction, so the stream is reproducible bit for bit.
    """
    with np.errstate(over="ignore"):
        t = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = _mix64(np.uint64(seed & _U64) + t * _GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-52 - 1.0


def fill_random(mat: Matrix, seed: int) -> Matrix:
    """Fill every valid element of mat from the splitmix64-v1 stream.

    Element (i, j) takes stream position t = j*m + i (column-major order over
    valid elements only).  Padding rows are left untouched.  Same seed, same
    shape: identical contents on any platform.
    """
    vals = random_values(seed, mat.m * mat.n)
    for j in range(mat.n):
        mat.data[j * mat.ld : j * mat.ld + mat.m] = vals[j * mat.m : (j + 1) * mat.m]
    return mat


def max_abs_diff(got: Matrix, want: Matrix, tol: float = 0.0) -> DiffReport:
    """Largest |got - want| over the valid region, plus the first offender.

    The offender scan runs in column-major order and records the first element
    whose absolute difference exceeds tol; with the default tol=0.0 that is
    the first differing element.  Raises on non-conformal shapes.
    """
    if got.shape != want.shape:
        raise ValueError(f"shape mismatch: {got.shape} vs {want.shape}")
    ga = to_array(got)
    wa = to_array(want)
    diff = np.abs(ga - wa)
    report = DiffReport(max_abs_diff=float(diff.max()))
    flat = diff.ravel(order="F")  # column-major scan
    bad = np.nonzero(flat > tol)[0]
    if bad.size:
        t = int(bad[0])
        i, j = t % got.m, t // got.m
        report.first_bad_i = i
        report.first_bad_j = j
        report.value_got = float(ga[i, j])
        report.value_expected = float(wa[i, j])
    return report


def flop_count(m: int, n: int, k: int) -> int:
    """Floating point operations in one C := A*B + C: one multiply and one add
    per (i, j, p) triple, i.e. 2*m*n*k.  Exact (Python integers never wrap)."""
    if m < 1 or n < 1 or k < 1:
        raise ValueError(f"dims must be positive, got m={m} n={n} k={k}")
    return 2 * m * n * k


def gflops(m: int, n: int, k: int, seconds: float) -> float:
    """Achieved GFLOPS for one GEMM of the given shape over a wall time."""
    if seconds <= 0.0:
        raise ValueError(f"seconds must be positive, got {seconds}")
    return flop_count(m, n, k) / (seconds * 1.0e9)
