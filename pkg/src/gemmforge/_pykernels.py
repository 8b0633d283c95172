"""Pure-Python backend: reference implementations of every hot loop.

Each function here mirrors a compiled twin in _ckernels.pyx.  Both backends
traverse elements in the same order and keep multiply and add as separate
rounded operations, so their outputs are bitwise identical; the compiled side
is built with FP contraction disabled for exactly this reason.

All matrix arguments are flat float64 buffers plus explicit leading
dimensions.  Element (i, j) of a logical matrix sits at j*ld + i.
"""

from __future__ import annotations


def naive(a, lda, b, ldb, c, ldc, m, n, k):
    """C := A*B + C with loops ordered i, j, p.  The correctness oracle."""
    am = memoryview(a)
    bm = memoryview(b)
    cm = memoryview(c)
    for i in range(m):
        for j in range(n):
            acc = cm[j * ldc + i]
            for p in range(k):
                acc = acc + am[p * lda + i] * bm[j * ldb + p]
            cm[j * ldc + i] = acc


def colwise(a, lda, b, ldb, c, ldc, m, n, k):
    """Same arithmetic as naive, loops reordered j, p, i.

    The innermost loop walks one column of C and one column of A at unit
    stride.  Each C element still accumulates its k products in ascending p
    order, so the result matches naive bitwise.
    """
    am = memoryview(a)
    bm = memoryview(b)
    cm = memoryview(c)
    for j in range(n):
        for p in range(k):
            bv = bm[j * ldb + p]
            co = j * ldc
            ao = p * lda
            for i in range(m):
                cm[co + i] = cm[co + i] + am[ao + i] * bv


def register_tiled(a, lda, b, ldb, c, ldc, m, n, k, mr, nr):
    """C := A*B + C over mr x nr tiles of C held in a local accumulator.

    Each tile is loaded once, accumulates all k rank-1 contributions in
    ascending p order, and is stored once.  Edge tiles use the same
    zero-padded mr*nr temporary; only the valid mv x nv part is loaded or
    written back, and A/B are never read out of range.
    """
    am = memoryview(a)
    bm = memoryview(b)
    cm = memoryview(c)
    for j0 in range(0, n, nr):
        nv = min(nr, n - j0)
        for i0 in range(0, m, mr):
            mv = min(mr, m - i0)
            tile = [0.0] * (mr * nr)
            for jj in range(nv):
                co = (j0 + jj) * ldc + i0
                to = jj * mr
                for ii in range(mv):
                    tile[to + ii] = cm[co + ii]
            for p in range(k):
                ao = p * lda + i0
                for jj in range(nv):
                    bv = bm[(j0 + jj) * ldb + p]
                    to = jj * mr
                    for ii in range(mv):
                        tile[to + ii] = tile[to + ii] + am[ao + ii] * bv
            for jj in range(nv):
                co = (j0 + jj) * ldc + i0
                to = jj * mr
                for ii in range(mv):
                    cm[co + ii] = tile[to + ii]


def rank1(acc, a_col, b_row, mr, nr):
    """acc(i, j) += a_col(i) * b_row(j); acc is mr x nr column-major.

    One multiply and one add per element, never fused.
    """
    av = memoryview(a_col)
    bv_ = memoryview(b_row)
    cv = memoryview(acc)
    for jj in range(nr):
        bv = bv_[jj]
        to = jj * mr
        for ii in range(mr):
            cv[to + ii] = cv[to + ii] + av[ii] * bv


def micro_kernel(kc, a_panel, b_panel, c, ldc, mr, nr, mv, nv):
    """kc rank-1 updates from packed panels into one mr x nr tile of C.

    a_panel holds kc contiguous length-mr columns, b_panel kc contiguous
    length-nr rows (packed format).  The tile accumulates in a zero-padded
    local buffer; panel padding lanes contribute exact zeros and only the
    valid mv x nv region of C is loaded or stored.
    """
    ap = memoryview(a_panel)
    bp = memoryview(b_panel)
    cm = memoryview(c)
    tile = [0.0] * (mr * nr)
    for jj in range(nv):
        co = jj * ldc
        to = jj * mr
        for ii in range(mv):
            tile[to + ii] = cm[co + ii]
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
            cm[co + ii] = tile[to + ii]


def pack_a(src, ld, mc, kc, mr, buf):
    """Pack an mc x kc block of A into row panels of height mr.

    Panel q covers rows [q*mr, q*mr + mr); within a panel the kc columns are
    stored contiguously, each of length mr.  Rows past mc in the last panel
    are zero-filled so the micro-kernel can always run a full mr lanes.
    """
    sv = memoryview(src)
    bv = memoryview(buf)
    npan = (mc + mr - 1) // mr
    for q in range(npan):
        base = q * mr * kc
        r0 = q * mr
        rows = min(mr, mc - r0)
        for p in range(kc):
            so = p * ld + r0
            bo = base + p * mr
            for ii in range(rows):
                bv[bo + ii] = sv[so + ii]
            for ii in range(rows, mr):
                bv[bo + ii] = 0.0


def pack_b(src, ld, kc, nc, nr, buf):
    """Pack a kc x nc block of B into column panels of width nr.

    Panel q covers columns [q*nr, q*nr + nr); within a panel the kc rows are
    stored contiguously, each of length nr.  Columns past nc in the last
    panel are zero-filled.
    """
    sv = memoryview(src)
    bv = memoryview(buf)
    npan = (nc + nr - 1) // nr
    for q in range(npan):
        base = q * nr * kc
        c0 = q * nr
        cols = min(nr, nc - c0)
        for p in range(kc):
            bo = base + p * nr
            for jj in range(cols):
                bv[bo + jj] = sv[(c0 + jj) * ld + p]
            for jj in range(cols, nr):
                bv[bo + jj] = 0.0


def goto_block(apack, bpack, c, ldc, mcp, ncp, kcp, mr, nr, jr_lo, jr_hi):
    """Loops 2 and 1 of the five-loop algorithm over packed blocks.

    Runs micro-tile columns jr_lo..jr_hi-1 (indices into the nr-wide panel
    grid of the packed B block) against every mr-high panel of the packed A
    block.  c points at the (ic, jc) corner of the output block.
    """
    npan_a = (mcp + mr - 1) // mr
    for jrp in range(jr_lo, jr_hi):
        jr = jrp * nr
        nv = min(nr, ncp - jr)
        bo = jrp * nr * kcp
        for irp in range(npan_a):
            ir = irp * mr
            mv = min(mr, mcp - ir)
            micro_kernel(
                kcp,
                apack[irp * mr * kcp : (irp + 1) * mr * kcp],
                bpack[bo : bo + nr * kcp],
                c[jr * ldc + ir :],
                ldc,
                mr,
                nr,
                mv,
                nv,
            )


def goto_block_census(
    apack, bpack, c, ldc, mcp, ncp, kcp, mr, nr, jr_lo, jr_hi, base, worker, census
):
    """goto_block plus write instrumentation.

    Appends (flat_offset, worker) to census for every C element stored, where
    flat_offset = base + local offset and base is the offset of c within the
    full output buffer.  Used to prove each element has exactly one writer
    under parallel execution.
    """
    npan_a = (mcp + mr - 1) // mr
    for jrp in range(jr_lo, jr_hi):
        jr = jrp * nr
        nv = min(nr, ncp - jr)
        bo = jrp * nr * kcp
        for irp in range(npan_a):
            ir = irp * mr
            mv = min(mr, mcp - ir)
            micro_kernel(
                kcp,
                apack[irp * mr * kcp : (irp + 1) * mr * kcp],
                bpack[bo : bo + nr * kcp],
                c[jr * ldc + ir :],
                ldc,
                mr,
                nr,
                mv,
                nv,
            )
            for jj in range(nv):
                for ii in range(mv):
                    census.append((base + (jr + jj) * ldc + ir + ii, worker))
