"""Build script: compiles the optional monomial-product kernel.

The package is pure Python; the Cython extension only accelerates the
hot monomial-merge path inside the superalgebra.  If Cython or a C
compiler is missing the build silently degrades to the pure-Python
kernel selected at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/diracdeform/_mulkernel.pyx"],
        language_level=3,
    )
except Exception:
    pass

setup(ext_modules=ext_modules)
