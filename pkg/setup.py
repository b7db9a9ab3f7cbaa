"""Build script for the optional compiled sampler core.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed, not functionality.
Set BIPHOTON_SKIP_EXT=1 to install pure-Python on purpose.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("BIPHOTON_SKIP_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "biphoton.kernels._core",
                    ["src/biphoton/kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
