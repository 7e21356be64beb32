"""Build glue for the optional compiled transport kernel.

The package is fully functional without the extension (a pure-Python twin is
selected at import time); building it just makes the monodromy transports
faster.  Any failure here degrades to the pure build rather than aborting.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("galcert._kernels", ["src/galcert/_kernels.pyx"])],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain dependent
    print(f"skipping compiled kernel ({exc}); pure-Python backend will be used")

setup(ext_modules=ext_modules)
