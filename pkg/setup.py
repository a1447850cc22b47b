"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time); building it just makes the hot
paths fast.  Compile in place with:

    python setup.py build_ext --inplace

or install editable with the host toolchain:

    pip install -e . --no-build-isolation
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "cncrl._kernels._core",
                ["src/cncrl/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    import warnings

    warnings.warn("Cython not available; building without the compiled kernels")

setup(ext_modules=ext_modules)
