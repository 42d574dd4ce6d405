"""Build script: compiles the optional kernel extension.

The package works without the extension (pure-Python kernels are selected
at import time), so the build is marked optional and a failed compile does
not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "cadseg._kernels._compiled",
        sources=["src/cadseg/_kernels/_compiled.pyx"],
        language="c++",
        extra_compile_args=["-O3", "-std=c++11"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
