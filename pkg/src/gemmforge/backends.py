"""Backend selection: compiled kernels when available, pure Python otherwise.

Both backends expose the same flat-buffer kernel functions and produce
bitwise identical results.  Selection order:

  1. GEMMFORGE_BACKEND environment variable ("c", "python", or "auto"),
  2. set_active_backend() calls (the CLI --backend flag uses this),
  3. default "auto": the compiled extension if it imported, else pure Python.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built; pure Python still works
    _ckernels = None

__all__ = ["Backend", "available_backends", "get_backend", "active_backend", "set_active_backend"]


@dataclass(frozen=True)
class Backend:
    """Uniform view of one kernel implementation set."""

    name: str
    naive: Callable
    colwise: Callable
    register_tiled: Callable
    rank1: Callable
    micro_kernel: Callable
    pack_a: Callable
    pack_b: Callable
    goto_block: Callable


def _wrap(name: str, mod) -> Backend:
    return Backend(
        name=name,
        naive=mod.naive,
        colwise=mod.colwise,
        register_tiled=mod.register_tiled,
        rank1=mod.rank1,
        micro_kernel=mod.micro_kernel,
        pack_a=mod.pack_a,
        pack_b=mod.pack_b,
        goto_block=mod.goto_block,
    )


_PYTHON = _wrap("python", _pykernels)
_COMPILED = _wrap("c", _ckernels) if _ckernels is not None else None


def available_backends() -> list[str]:
    names = ["python"]
    if _COMPILED is not None:
        names.insert(0, "c")
    return names


def get_backend(name: str) -> Backend:
    """Resolve a backend by name; "auto" prefers the compiled extension."""
    if name == "auto":
        return _COMPILED if _COMPILED is not None else _PYTHON
    if name == "python":
        return _PYTHON
    if name == "c":
        if _COMPILED is None:
            raise ValueError("compiled backend requested but the extension is not built")
        return _COMPILED
    raise ValueError(f"unknown backend {name!r}; choose from c, python, auto")


_active = get_backend(os.environ.get("GEMMFORGE_BACKEND", "auto"))


def active_backend() -> Backend:
    return _active


def set_active_backend(name: str) -> Backend:
    global _active
    _active = get_backend(name)
    return _active


def resolve(backend) -> Backend:
    """Engine-call helper: None means the active backend, a string is looked
    up by name, a Backend passes through."""
    if backend is None:
        return _active
    if isinstance(backend, Backend):
        return backend
    return get_backend(backend)
