"""Build script for the optional compiled kernels.

The package is pure Python plus one Cython extension
(``bandwatch.kernels._native``) that accelerates the per-trace Beta
sampling loops.  The extension links against numpy's bundled static
random-number library so that it draws from the exact same PCG64 stream
as ``numpy.random.Generator``.  It is marked optional: if no compiler
(or no Cython) is available the install proceeds and the package falls
back to the pure-numpy kernels at import time.
"""

import os

from setuptools import setup


def native_extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []

    randlib = os.path.join(os.path.dirname(numpy.random.__file__), "lib")
    ext = Extension(
        "bandwatch.kernels._native",
        ["src/bandwatch/kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        library_dirs=[randlib],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True
    try:
        return cythonize([ext], language_level=3)
    except Exception:
        return []


setup(ext_modules=native_extensions())
