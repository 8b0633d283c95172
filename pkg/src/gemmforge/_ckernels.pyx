# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend: the hot loops behind every engine.

Function-for-function mirror of gemmforge._pykernels.  Traversal order and
the separation of multiply from add are identical, and the extension is
compiled with FP contraction disabled, so both backends produce bitwise
identical output.  All compute loops release the GIL so thread-level
parallelism in the driver scales on multi-core hosts.
"""

# 12 x 12 is the largest register tile any engine accepts.
TILE_CAP = 144


cdef void _mk(Py_ssize_t kc, const double *ap, const double *bp,
              double *c, Py_ssize_t ldc,
              Py_ssize_t mr, Py_ssize_t nr, Py_ssize_t mv, Py_ssize_t nv) noexcept nogil:
    # One micro-tile: load valid C, run kc rank-1 updates over full mr x nr
    # lanes (panel padding lanes are zero, so they add exact zeros), store
    # only the valid mv x nv region.
    cdef double tile[144]
    cdef Py_ssize_t p, ii, jj, to, ao, bo, co
    cdef double bv
    for jj in range(nr):
        to = jj * mr
        for ii in range(mr):
            tile[to + ii] = 0.0
    for jj in range(nv):
        co = jj * ldc
        to = jj * mr
        for ii in range(mv):
            tile[to + ii] = c[co + ii]
    for p in range(kc):
        ao = p * mr
        bo = p * nr
        for jj in range(nr):
            bv = bp[bo + jj]
            to = jj * mr
            for ii in range(mr):
                tile[to + ii] = tile[to + ii] + ap[ao + ii] * bv
    for jj in range(nv):
        co = jj * ldc
        to = jj * mr
        for ii in range(mv):
            c[co + ii] = tile[to + ii]


def naive(double[::1] a, Py_ssize_t lda, double[::1] b, Py_ssize_t ldb,
          double[::1] c, Py_ssize_t ldc, Py_ssize_t m, Py_ssize_t n, Py_ssize_t k):
    """C := A*B + C with loops ordered i, j, p.  The correctness oracle."""
    cdef Py_ssize_t i, j, p
    cdef double acc
    with nogil:
        for i in range(m):
            for j in range(n):
                acc = c[j * ldc + i]
                for p in range(k):
                    acc = acc + a[p * lda + i] * b[j * ldb + p]
                c[j * ldc + i] = acc


def colwise(double[::1] a, Py_ssize_t lda, double[::1] b, Py_ssize_t ldb,
            double[::1] c, Py_ssize_t ldc, Py_ssize_t m, Py_ssize_t n, Py_ssize_t k):
    """Loops reordered j, p, i; unit stride innermost, bitwise equal to naive."""
    cdef Py_ssize_t i, j, p, co, ao
    cdef double bv
    with nogil:
        for j in range(n):
            for p in range(k):
                bv = b[j * ldb + p]
                co = j * ldc
                ao = p * lda
                for i in range(m):
                    c[co + i] = c[co + i] + a[ao + i] * bv


def register_tiled(double[::1] a, Py_ssize_t lda, double[::1] b, Py_ssize_t ldb,
                   double[::1] c, Py_ssize_t ldc,
                   Py_ssize_t m, Py_ssize_t n, Py_ssize_t k,
                   Py_ssize_t mr, Py_ssize_t nr):
    """C := A*B + C over mr x nr tiles held in a local accumulator."""
    cdef Py_ssize_t i0, j0, p, ii, jj, mv, nv, to, ao, co
    cdef double bv
    cdef double tile[144]
    if mr < 1 or nr < 1 or mr * nr > 144:
        raise ValueError(f"tile {mr}x{nr} outside supported range")
    with nogil:
        j0 = 0
        while j0 < n:  # stepped loops stay while-form so the body compiles to C
            nv = min(nr, n - j0)
            i0 = 0
            while i0 < m:
                mv = min(mr, m - i0)
                for jj in range(nr):
                    to = jj * mr
                    for ii in range(mr):
                        tile[to + ii] = 0.0
                for jj in range(nv):
                    co = (j0 + jj) * ldc + i0
                    to = jj * mr
                    for ii in range(mv):
                        tile[to + ii] = c[co + ii]
                for p in range(k):
                    ao = p * lda + i0
                    for jj in range(nv):
                        bv = b[(j0 + jj) * ldb + p]
                        to = jj * mr
                        for ii in range(mv):
                            tile[to + ii] = tile[to + ii] + a[ao + ii] * bv
                for jj in range(nv):
                    co = (j0 + jj) * ldc + i0
                    to = jj * mr
                    for ii in range(mv):
                        c[co + ii] = tile[to + ii]
                i0 += mr
            j0 += nr


def rank1(double[::1] acc, double[::1] a_col, double[::1] b_row,
          Py_ssize_t mr, Py_ssize_t nr):
    """acc(i, j) += a_col(i) * b_row(j); multiply and add never fused."""
    cdef Py_ssize_t ii, jj, to
    cdef double bv
    with nogil:
        for jj in range(nr):
            bv = b_row[jj]
            to = jj * mr
            for ii in range(mr):
                acc[to + ii] = acc[to + ii] + a_col[ii] * bv


def micro_kernel(Py_ssize_t kc, double[::1] a_panel, double[::1] b_panel,
                 double[::1] c, Py_ssize_t ldc,
                 Py_ssize_t mr, Py_ssize_t nr, Py_ssize_t mv, Py_ssize_t nv):
    """kc rank-1 updates from packed panels into one mr x nr tile of C."""
    if mr < 1 or nr < 1 or mr * nr > 144:
        raise ValueError(f"tile {mr}x{nr} outside supported range")
    with nogil:
        _mk(kc, &a_panel[0], &b_panel[0], &c[0], ldc, mr, nr, mv, nv)


def pack_a(double[::1] src, Py_ssize_t ld, Py_ssize_t mc, Py_ssize_t kc,
           Py_ssize_t mr, double[::1] buf):
    """Pack an mc x kc block of A into zero-padded row panels of height mr."""
    cdef Py_ssize_t q, p, ii, base, r0, rows, so, bo
    cdef Py_ssize_t npan = (mc + mr - 1) // mr
    with nogil:
        for q in range(npan):
            base = q * mr * kc
            r0 = q * mr
            rows = min(mr, mc - r0)
            for p in range(kc):
                so = p * ld + r0
                bo = base + p * mr
                for ii in range(rows):
                    buf[bo + ii] = src[so + ii]
                for ii in range(rows, mr):
                    buf[bo + ii] = 0.0


def pack_b(double[::1] src, Py_ssize_t ld, Py_ssize_t kc, Py_ssize_t nc,
           Py_ssize_t nr, double[::1] buf):
    """Pack a kc x nc block of B into zero-padded column panels of width nr."""
    cdef Py_ssize_t q, p, jj, base, c0, cols, bo
    cdef Py_ssize_t npan = (nc + nr - 1) // nr
    with nogil:
        for q in range(npan):
            base = q * nr * kc
            c0 = q * nr
            cols = min(nr, nc - c0)
            for p in range(kc):
                bo = base + p * nr
                for jj in range(cols):
                    buf[bo + jj] = src[(c0 + jj) * ld + p]
                for jj in range(cols, nr):
                    buf[bo + jj] = 0.0


def goto_block(double[::1] apack, double[::1] bpack, double[::1] c, Py_ssize_t ldc,
               Py_ssize_t mcp, Py_ssize_t ncp, Py_ssize_t kcp,
               Py_ssize_t mr, Py_ssize_t nr, Py_ssize_t jr_lo, Py_ssize_t jr_hi):
    """Loops 2 and 1 of the five-loop algorithm over packed blocks."""
    cdef Py_ssize_t jrp, irp, jr, ir, mv, nv
    cdef Py_ssize_t npan_a = (mcp + mr - 1) // mr
    if mr < 1 or nr < 1 or mr * nr > 144:
        raise ValueError(f"tile {mr}x{nr} outside supported range")
    with nogil:
        for jrp in range(jr_lo, jr_hi):
            jr = jrp * nr
            nv = min(nr, ncp - jr)
            for irp in range(npan_a):
                ir = irp * mr
                mv = min(mr, mcp - ir)
                _mk(kcp, &apack[irp * mr * kcp], &bpack[jrp * nr * kcp],
                    &c[jr * ldc + ir], ldc, mr, nr, mv, nv)
