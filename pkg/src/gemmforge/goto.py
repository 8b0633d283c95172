"""Five-loop packed GEMM: cache blocking plus operand packing.

Loop structure, outermost first:

  loop 5: jc over n in steps of nc   (column panels of B and C)
  loop 4: pc over k in steps of kc   (pack the kc x nc block of B)
  loop 3: ic over m in steps of mc   (pack the mc x kc block of A)
  loop 2: jr over nc' in steps of nr (micro-panel columns of packed B)
  loop 1: ir over mc' in steps of mr (micro-panels of packed A)
  micro-kernel: kc' rank-1 updates into one mr x nr tile of C

Packing copies each block into contiguous zero-padded micro-panels so the
micro-kernel streams its operands at unit stride regardless of the original
leading dimensions.  The ragged depth kc' is never padded; it is passed to
the micro-kernel as-is.  Accumulation order per C element is unchanged from
the naive engine, so with the built-in scalar micro-kernel the five-loop
result is bitwise equal to gemm_naive for every parameter choice.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backends import resolve
from .kernels import MAX_TILE, check_conformal
from .matrix import Matrix, aligned_zeros

__all__ = [
    "GotoParams",
    "PackedBlock",
    "pack_a",
    "pack_b",
    "unpack",
    "param_violations",
    "gemm_goto",
]


@dataclass(frozen=True)
class GotoParams:
    """Blocking parameters for the five-loop engine.

    mr, nr size the register tile; mc, kc, nc size the cache blocks.  mc must
    be a multiple of mr and nc a multiple of nr so packed panels never split
    a register tile.  micro_kernel names the registered micro-kernel to run
    ("scalar" is the built-in).
    """

    mr: int = 4
    nr: int = 4
    mc: int = 64
    kc: int = 256
    nc: int = 4096
    micro_kernel: str = "scalar"

    def with_(self, **kw) -> "GotoParams":
        return replace(self, **kw)

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.mr, self.nr, self.mc, self.kc, self.nc)


def param_violations(p: GotoParams) -> list[str]:
    """Every violated parameter invariant, not just the first."""
    out = []
    for name in ("mr", "nr"):
        v = getattr(p, name)
        if not 1 <= v <= MAX_TILE:
            out.append(f"{name}={v} violates 1 <= {name} <= {MAX_TILE}")
    for name in ("mc", "kc", "nc"):
        v = getattr(p, name)
        if v < 1:
            out.append(f"{name}={v} violates {name} >= 1")
    if p.mr >= 1 and p.mc >= 1 and p.mc % p.mr != 0:
        out.append(f"mc={p.mc} not a multiple of mr={p.mr}")
    if p.nr >= 1 and p.nc >= 1 and p.nc % p.nr != 0:
        out.append(f"nc={p.nc} not a multiple of nr={p.nr}")
    return out


@dataclass
class PackedBlock:
    """One packed operand block: contiguous zero-padded micro-panels.

    kind "A": extent rows of A split into panels of panel_len=mr rows; panel
    q stores its depth columns contiguously, each of length mr.  kind "B":
    extent columns of B split into panels of panel_len=nr columns; panel q
    stores its depth rows contiguously, each of length nr.  The final panel
    is zero-padded when panel_len does not divide extent.
    """

    kind: str
    panel_len: int
    depth: int
    extent: int
    buffer: np.ndarray

    @property
    def panel_count(self) -> int:
        return -(-self.extent // self.panel_len)

    @property
    def valid_tail(self) -> int:
        """Valid lanes in the last panel (== panel_len when extent divides)."""
        return self.extent - (self.panel_count - 1) * self.panel_len

    def panel(self, q: int) -> np.ndarray:
        size = self.panel_len * self.depth
        if not 0 <= q < self.panel_count:
            raise IndexError(f"panel {q} out of range 0..{self.panel_count - 1}")
        return self.buffer[q * size : (q + 1) * size]


def pack_a(block: Matrix, mr: int, backend=None) -> PackedBlock:
    """Pack an mc' x kc' block of A into mr-row panels (layout above)."""
    if not 1 <= mr <= MAX_TILE:
        raise ValueError(f"mr={mr} outside supported range 1..{MAX_TILE}")
    bk = resolve(backend)
    npan = -(-block.m // mr)
    buf = aligned_zeros(npan * mr * block.n)
    bk.pack_a(block.data, block.ld, block.m, block.n, mr, buf)
    return PackedBlock("A", mr, block.n, block.m, buf)


def pack_b(block: Matrix, nr: int, backend=None) -> PackedBlock:
    """Pack a kc' x nc' block of B into nr-column panels (layout above)."""
    if not 1 <= nr <= MAX_TILE:
        raise ValueError(f"nr={nr} outside supported range 1..{MAX_TILE}")
    bk = resolve(backend)
    npan = -(-block.n // nr)
    buf = aligned_zeros(npan * nr * block.m)
    bk.pack_b(block.data, block.ld, block.m, block.n, nr, buf)
    return PackedBlock("B", nr, block.m, block.n, buf)


def unpack(packed: PackedBlock, out: Matrix) -> Matrix:
    """Inverse of packing: scatter valid lanes of a PackedBlock into out.

    For kind "A" out must be extent x depth; for kind "B", depth x extent.
    Padding lanes of the final panel are not copied.
    """
    pl, depth, extent = packed.panel_len, packed.depth, packed.extent
    if packed.kind == "A":
        if (out.m, out.n) != (extent, depth):
            raise ValueError(f"out is {out.m}x{out.n}, expected {extent}x{depth}")
        for q in range(packed.panel_count):
            pan = packed.panel(q)
            r0 = q * pl
            rows = min(pl, extent - r0)
            for p in range(depth):
                out.data[p * out.ld + r0 : p * out.ld + r0 + rows] = pan[
                    p * pl : p * pl + rows
                ]
    elif packed.kind == "B":
        if (out.m, out.n) != (depth, extent):
            raise ValueError(f"out is {out.m}x{out.n}, expected {depth}x{extent}")
        for q in range(packed.panel_count):
            pan = packed.panel(q)
            c0 = q * pl
            cols = min(pl, extent - c0)
            for p in range(depth):
                for jj in range(cols):
                    out.data[(c0 + jj) * out.ld + p] = pan[p * pl + jj]
    else:
        raise ValueError(f"unknown packed kind {packed.kind!r}")
    return out


def _resolve_micro(params: GotoParams, micro_kernel_fn):
    """Return (fast, fn): fast means the backend's built-in scalar path."""
    if micro_kernel_fn is not None:
        return False, micro_kernel_fn
    if params.micro_kernel == "scalar":
        return True, None
    from .registry import default_registry  # deferred: registry imports this module

    return False, default_registry().micro_kernel(params.micro_kernel)


def new_stats() -> dict:
    """Fresh instrumentation counters for one engine run."""
    return {"pack_a": 0, "pack_b": 0, "micro_tiles": 0}


def gemm_goto(a: Matrix, b: Matrix, c: Matrix, params: GotoParams | None = None,
              backend=None, stats: dict | None = None, micro_kernel_fn=None) -> Matrix:
    """Five-loop packed GEMM, serial.

    stats, when given, accumulates pack_a / pack_b call counts and the number
    of micro-tile updates.  micro_kernel_fn overrides the kernel named by
    params (used by the registry); the built-in scalar kernel runs compiled
    when the active backend is compiled.
    """
    if params is None:
        params = GotoParams()
    bad = param_violations(params)
    if bad:
        raise ValueError("invalid blocking parameters: " + "; ".join(bad))
    m, n, k = check_conformal(a, b, c)
    fast, micro_fn = _resolve_micro(params, micro_kernel_fn)
    bk = resolve(backend)
    mr, nr, mc, kc, nc = params.as_tuple()

    # Pack buffers sized for the largest block this problem produces; later
    # ragged blocks reuse a prefix.
    kc_buf = min(kc, k)
    apack = aligned_zeros(-(-min(mc, m) // mr) * mr * kc_buf)
    bpack = aligned_zeros(-(-min(nc, n) // nr) * nr * kc_buf)

    for jc in range(0, n, nc):  # loop 5
        ncp = min(nc, n - jc)
        jr_panels = -(-ncp // nr)
        for pc in range(0, k, kc):  # loop 4
            kcp = min(kc, k - pc)
            bk.pack_b(b.data[jc * b.ld + pc :], b.ld, kcp, ncp, nr, bpack)
            if stats is not None:
                stats["pack_b"] = stats.get("pack_b", 0) + 1
            for ic in range(0, m, mc):  # loop 3
                mcp = min(mc, m - ic)
                bk.pack_a(a.data[pc * a.ld + ic :], a.ld, mcp, kcp, mr, apack)
                if stats is not None:
                    stats["pack_a"] = stats.get("pack_a", 0) + 1
                cview = c.data[jc * c.ld + ic :]
                if fast:
                    bk.goto_block(
                        apack, bpack, cview, c.ld, mcp, ncp, kcp, mr, nr, 0, jr_panels
                    )
                else:
                    _custom_block(
                        micro_fn, apack, bpack, cview, c.ld, mcp, ncp, kcp, mr, nr,
                        0, jr_panels,
                    )
                if stats is not None:
                    stats["micro_tiles"] = (
                        stats.get("micro_tiles", 0) + jr_panels * (-(-mcp // mr))
                    )
    return c


def _custom_block(fn, apack, bpack, cview, ldc, mcp, ncp, kcp, mr, nr, jr_lo, jr_hi):
    """Loops 2 and 1 around a registered micro-kernel callable.

    The callable contract: fn(kc, mr, nr, a_panel, b_panel, acc) accumulates
    kc rank-1 updates into the mr x nr column-major acc array.  Fringe
    masking happens here, so kernels never see partial tiles.
    """
    npan_a = -(-mcp // mr)
    tile = np.zeros(mr * nr, dtype=np.float64)
    for jrp in range(jr_lo, jr_hi):
        jr = jrp * nr
        nv = min(nr, ncp - jr)
        bpan = bpack[jrp * nr * kcp : (jrp + 1) * nr * kcp]
        for irp in range(npan_a):
            ir = irp * mr
            mv = min(mr, mcp - ir)
            apan = apack[irp * mr * kcp : (irp + 1) * mr * kcp]
            tile[:] = 0.0
            for jj in range(nv):
                base = (jr + jj) * ldc + ir
                tile[jj * mr : jj * mr + mv] = cview[base : base + mv]
            fn(kcp, mr, nr, apan, bpan, tile)
            for jj in range(nv):
                base = (jr + jj) * ldc + ir
                cview[base : base + mv] = tile[jj * mr : jj * mr + mv]
