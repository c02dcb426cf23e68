"""Build script for the optional compiled redundancy kernel.

The package is fully functional without the extension; a pure-Python
fallback is selected at import time. Set NEEDLEGAUGE_PURE_PYTHON=1 to
skip the compile step entirely.
"""

import os
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


def _extensions():
    if os.environ.get("NEEDLEGAUGE_PURE_PYTHON"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; building pure-Python needlegauge")
        return []
    return cythonize(
        [
            Extension(
                "needlegauge.kernels._redundancy",
                ["src/needlegauge/kernels/_redundancy.pyx"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


class OptionalBuildExt(build_ext):
    """Treat extension build failures as non-fatal."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, headers missing, ...
            warnings.warn(f"Skipping compiled kernel ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"Skipping {ext.name} ({exc}); pure-Python fallback will be used")


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
