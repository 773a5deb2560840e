"""Builds the optional compiled kernel extension.

The package works without it: silentlink._kernels falls back to the pure
Python implementations when the extension is absent or fails to build.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "silentlink._kernels._native",
                ["src/silentlink/_kernels/_native.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
