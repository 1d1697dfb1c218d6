"""Build script: compiles the optional accelerator extension.

The package works without the extension (a pure-numpy backend is selected at
import time), so any failure here degrades to a pure-Python install instead
of aborting. Set FACTORCOV_NO_EXT=1 to skip the compile step entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: building factorcov._fastkernels failed ({exc}); "
            "installing with the pure-Python kernel backend",
            file=sys.stderr,
        )


def extension_modules():
    if os.environ.get("FACTORCOV_NO_EXT") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "factorcov._fastkernels",
        ["src/factorcov/_fastkernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extension_modules(), cmdclass={"build_ext": OptionalBuildExt})
