"""Build script: compiles the optional Cython kernel.

The package is pure Python plus one optional extension, pcanon._kernel,
holding the hot polynomial and matrix loops.  If Cython (or a C compiler)
is unavailable the build still succeeds and the package falls back to
pcanon._kernel_py at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/pcanon/_kernel.pyx"],
        language_level=3,
    )
except Exception as exc:  # no Cython, no compiler: pure fallback
    print("pcanon: building without the compiled kernel (%s)" % (exc,))

setup(ext_modules=ext_modules)
