"""Build script: compiles the native kernel extension when Cython is available.

The package works without the extension (pure-Python kernels are picked at
import time), so a missing compiler or Cython only costs speed.
"""

import os

from setuptools import setup

ext_modules = []
try:
    if not os.path.exists("src/itx/_kernels/_native.pyx"):
        raise ImportError
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "itx._kernels._native",
                ["src/itx/_kernels/_native.pyx"],
                # -ffp-contract=off keeps double arithmetic bit-identical to
                # the pure-Python fallback (no fused multiply-add).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
