import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install, kernels fall back at import
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("STOCHCUT_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "stochcut._ckernels",
                ["src/stochcut/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: kernels must match the Python fallback bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
