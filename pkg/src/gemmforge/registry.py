"""Registry of micro-kernels and GEMM variants, with a validation gate.

Benchmarks and the CLI select implementations by name.  Every entry is
checked against the naive oracle on a few small problems when registered;
an entry that fails never becomes selectable, so a typo in a contributed
kernel surfaces at registration time rather than as silently wrong numbers
in a benchmark table.
"""

from __future__ import annotations

from types import SimpleNamespace
from typing import Callable

import numpy as np

from .blocking import gemm_blocked
from .goto import GotoParams, gemm_goto, pack_a, pack_b
from .kernels import (
    gemm_colwise,
    gemm_naive,
    gemm_register_tiled,
    tolerance,
)
from .matrix import alloc_matrix, copy_matrix, fill_random, max_abs_diff, to_array
from .parallel import gemm_goto_parallel, make_plan

__all__ = ["KernelRegistry", "default_registry", "scalar_micro_kernel"]


def scalar_micro_kernel(kc: int, mr: int, nr: int, a_panel, b_panel, acc) -> None:
    """Reference micro-kernel: kc rank-1 updates, p ascending, never fused.

    Same accumulation order as the backends' built-in micro-kernel, so it is
    bitwise interchangeable with them.  acc is mr x nr column-major.
    """
    for p in range(kc):
        ao = p * mr
        bo = p * nr
        for jj in range(nr):
            bv = b_panel[bo + jj]
            to = jj * mr
            for ii in range(mr):
                acc[to + ii] = acc[to + ii] + a_panel[ao + ii] * bv


def _default_cfg():
    # Minimal config for validation runs; the real Config duck-types this.
    return SimpleNamespace(goto=GotoParams(), threads=1, parallel_loop="ic")


def _random_problem(m, n, k, seed):
    a = fill_random(alloc_matrix(m, k), seed)
    b = fill_random(alloc_matrix(k, n), seed + 1)
    c = fill_random(alloc_matrix(m, n), seed + 2)
    return a, b, c


class KernelRegistry:
    """Named micro-kernels and GEMM variants behind a validation gate."""

    def __init__(self):
        self._micro: dict[str, Callable] = {}
        self._variants: dict[str, Callable] = {}

    # -- micro-kernels ----------------------------------------------------

    def register_micro_kernel(self, name: str, fn: Callable, validate: bool = True):
        """Register fn(kc, mr, nr, a_panel, b_panel, acc).

        With validate=True (the default, required for CLI selectability) the
        kernel is compared against the reference micro-kernel on a handful
        of packed problems and registration fails on any mismatch beyond the
        reorder tolerance.
        """
        if name in self._micro:
            raise ValueError(f"micro-kernel {name!r} already registered")
        if validate:
            self._validate_micro(name, fn)
        self._micro[name] = fn
        return fn

    def _validate_micro(self, name, fn):
        for kc, mr, nr, seed in ((1, 1, 1, 11), (3, 4, 4, 12), (5, 2, 7, 13)):
            a, b, c = _random_problem(mr, nr, kc, 1000 + seed)
            ap = pack_a(a, mr)
            bp = pack_b(b, nr)
            want = to_array(gemm_naive(a, b, copy_matrix(c)))
            acc = np.zeros(mr * nr)
            for j in range(nr):
                acc[j * mr : j * mr + mr] = c.data[j * c.ld : j * c.ld + mr]
            fn(kc, mr, nr, ap.buffer, bp.buffer, acc)
            got = acc.reshape((nr, mr)).T
            tol = tolerance(kc, 1.0, 1.0)
            if float(np.abs(got - want).max()) > tol:
                raise ValueError(
                    f"micro-kernel {name!r} failed validation on "
                    f"kc={kc} mr={mr} nr={nr}"
                )

    def micro_kernel(self, name: str) -> Callable:
        if name not in self._micro:
            raise ValueError(
                f"unknown micro-kernel {name!r}; registered: {sorted(self._micro)}"
            )
        return self._micro[name]

    def micro_kernel_names(self) -> list[str]:
        return sorted(self._micro)

    # -- gemm variants -----------------------------------------------------

    def register_variant(self, name: str, factory: Callable, validate: bool = True):
        """Register factory(cfg) -> engine(a, b, c, **kw).

        cfg provides .goto (GotoParams), .threads and .parallel_loop.  With
        validate=True the engine built from a default cfg is compared against
        the naive oracle on a few ragged problems.
        """
        if name in self._variants:
            raise ValueError(f"variant {name!r} already registered")
        if validate:
            self._validate_variant(name, factory)
        self._variants[name] = factory
        return factory

    def _validate_variant(self, name, factory):
        engine = factory(_default_cfg())
        for m, n, k, seed in ((5, 4, 3, 21), (8, 8, 8, 22), (9, 7, 11, 23)):
            a, b, c = _random_problem(m, n, k, 2000 + seed)
            want = gemm_naive(a, b, copy_matrix(c))
            got = engine(a, b, copy_matrix(c))
            tol = tolerance(k, 1.0, 1.0)
            if max_abs_diff(got, want, tol).first_bad_i is not None:
                raise ValueError(
                    f"variant {name!r} failed validation on m={m} n={n} k={k}"
                )

    def variant(self, name: str) -> Callable:
        if name not in self._variants:
            raise ValueError(
                f"unknown algorithm {name!r}; registered: {sorted(self._variants)}"
            )
        return self._variants[name]

    def variant_names(self) -> list[str]:
        return sorted(self._variants)

    def build_engine(self, name: str, cfg) -> Callable:
        return self.variant(name)(cfg)


# -- built-in variant factories -------------------------------------------


def _naive_factory(cfg):
    return lambda a, b, c, **kw: gemm_naive(a, b, c, **kw)


def _colwise_factory(cfg):
    return lambda a, b, c, **kw: gemm_colwise(a, b, c, **kw)


def _register_tiled_factory(cfg):
    p = cfg.goto
    return lambda a, b, c, **kw: gemm_register_tiled(a, b, c, p.mr, p.nr, **kw)


def _blocked_factory(cfg):
    # Cache blocks reuse the packed engine's sizes: bm=mc, bn=nc, bk=kc.
    p = cfg.goto
    return lambda a, b, c, **kw: gemm_blocked(a, b, c, p.mc, p.nc, p.kc, "naive", **kw)


def _blocked_tiled_factory(cfg):
    p = cfg.goto

    def run(a, b, c, backend=None, **kw):
        inner = lambda av, bv, cv: gemm_register_tiled(av, bv, cv, p.mr, p.nr, backend)
        return gemm_blocked(a, b, c, p.mc, p.nc, p.kc, inner, **kw)

    return run


def _goto_factory(cfg):
    p = cfg.goto
    threads = getattr(cfg, "threads", 1)
    loop = getattr(cfg, "parallel_loop", "ic")

    def run(a, b, c, backend=None, stats=None, **kw):
        if threads == 1:
            return gemm_goto(a, b, c, p, backend=backend, stats=stats, **kw)
        extent = a.m if loop == "ic" else b.n
        step = p.mc if loop == "ic" else p.nr
        plan = make_plan(loop, threads, extent, step)
        return gemm_goto_parallel(a, b, c, p, plan, backend=backend, stats=stats, **kw)

    return run


_default: KernelRegistry | None = None


def default_registry() -> KernelRegistry:
    """Singleton registry holding the built-in kernels and variants.

    Built lazily; the built-ins pass through the same validation gate as
    user entries.
    """
    global _default
    if _default is None:
        reg = KernelRegistry()
        reg.register_micro_kernel("scalar", scalar_micro_kernel)
        reg.register_variant("naive", _naive_factory)
        reg.register_variant("colwise", _colwise_factory)
        reg.register_variant("register_tiled", _register_tiled_factory)
        reg.register_variant("blocked", _blocked_factory)
        reg.register_variant("blocked_tiled", _blocked_tiled_factory)
        reg.register_variant("goto", _goto_factory)
        _default = reg
    return _default
