"""Build script.

The compiled kernel extension is optional: when Cython or a C compiler is
missing the install falls back to the pure numpy backend selected at import
time in ``shadowlab.kernels``.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    # a failed extension build must not fail the install
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print("*" * 72)
        print("WARNING: building the compiled kernel failed; the pure numpy")
        print("backend will be used instead. Reason: %s" % (exc,))
        print("*" * 72)


def maybe_extensions():
    if os.environ.get("SHADOWLAB_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "shadowlab._core",
        ["src/shadowlab/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=maybe_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
