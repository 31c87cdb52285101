"""Build hook for the optional compiled orbit kernel.

The extension is optional: if Cython is missing or compilation fails the
package still installs and falls back to the pure-Python kernel.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RICKER_PBC_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "ricker_pbc._kernels",
            sources=["src/ricker_pbc/_kernels.pyx"],
            # no FMA contraction so results match the Python fallback bit for bit
            extra_compile_args=["-O3", "-ffp-contract=off"],
            optional=True,
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
