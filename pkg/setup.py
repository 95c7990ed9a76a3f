"""Build script: compiles the optional fast kernels extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here is degraded to a warning.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "loopclone._kernels._fast",
                ["src/loopclone/_kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    ext_modules = []
    print(f"warning: fast kernels not built ({exc}); pure NumPy fallback will be used",
          file=sys.stderr)

setup(ext_modules=ext_modules)
