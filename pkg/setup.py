"""Build hook for the optional compiled Shapley kernel.

The package is fully functional without the extension; `calf._kernels`
falls back to a pure-Python implementation at import time. Compilation is
attempted here and skipped (with a warning) if no toolchain is available.
"""
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build extensions if possible; never fail the install over them."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing, etc.
            warnings.warn(f"skipping compiled kernels ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping {ext.name} ({exc}); pure-Python fallback will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "calf._kernels._shapley_c",
                ["src/calf/_kernels/_shapley_c.pyx"],
                # -ffp-contract=off: the kernel must round exactly like the
                # pure-Python fallback so results stay bit-identical.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
