"""gemmforge: layered dense double-precision GEMM engines.

All engines compute C := A*B + C on column-major float64 matrices and share
one accumulation-order contract, so every layer of the optimization ladder
(naive loops, column-ordered traversal, register tiling, cache blocking,
packed five-loop, threaded five-loop) produces bitwise identical results.
"""

from .backends import active_backend, available_backends, get_backend, set_active_backend
from .bench import (
    BenchRecord,
    TuneResult,
    VerificationError,
    emit,
    make_operands,
    run_sweep,
    tune,
    verify_algorithm,
)
from .blocking import BlockPartition, gemm_blocked, sub_view
from .config import Config, ConfigError, config_to_text, load_config, load_grid, validate
from .goto import GotoParams, PackedBlock, gemm_goto, pack_a, pack_b, unpack
from .kernels import (
    MicroTile,
    gemm_colwise,
    gemm_naive,
    gemm_register_tiled,
    micro_kernel,
    rank1_update,
    tolerance,
)
from .matrix import (
    DiffReport,
    Matrix,
    alloc_matrix,
    copy_matrix,
    fill_random,
    flop_count,
    gflops,
    map_index,
    matrix_from_rows,
    max_abs_diff,
    to_array,
)
from .parallel import MAX_THREADS, ParallelPlan, gemm_goto_parallel, make_plan
from .registry import KernelRegistry, default_registry

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Matrix", "DiffReport", "map_index", "alloc_matrix", "copy_matrix",
    "fill_random", "to_array", "matrix_from_rows", "max_abs_diff",
    "flop_count", "gflops",
    "gemm_naive", "gemm_colwise", "gemm_register_tiled", "MicroTile",
    "rank1_update", "micro_kernel", "tolerance",
    "BlockPartition", "sub_view", "gemm_blocked",
    "GotoParams", "PackedBlock", "pack_a", "pack_b", "unpack", "gemm_goto",
    "MAX_THREADS", "ParallelPlan", "make_plan", "gemm_goto_parallel",
    "KernelRegistry", "default_registry",
    "Config", "ConfigError", "load_config", "load_grid", "config_to_text", "validate",
    "BenchRecord", "TuneResult", "VerificationError", "run_sweep",
    "verify_algorithm", "emit", "tune", "make_operands",
    "active_backend", "available_backends", "get_backend", "set_active_backend",
]
