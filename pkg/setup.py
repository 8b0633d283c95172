import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps multiply and add as separate rounded operations.
# The compiled backend must match the pure-Python backend bitwise, and an
# FMA contraction would change the rounding of every accumulation step.
# optional=True: a failed native build degrades to the pure-Python backend
# instead of failing the install.
extensions = [
    Extension(
        "gemmforge._ckernels",
        ["src/gemmforge/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
