"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-numpy fallbacks are selected
at import time), so a failed compile only costs speed, not functionality.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / headers
            warnings.warn(f"skipping compiled kernels ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"failed to build {ext.name} ({exc}); using pure-Python fallback")


def make_extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "mamm._kernels",
        ["src/mamm/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=make_extensions(), cmdclass={"build_ext": optional_build_ext})
