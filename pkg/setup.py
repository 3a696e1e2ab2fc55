"""Build script for the compiled trial-loop kernel.

The extension is optional at runtime: clse falls back to a pure-Python
kernel if the compiled module is absent (see clse/kernels/__init__.py).
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "clse.kernels._native",
        ["src/clse/kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
