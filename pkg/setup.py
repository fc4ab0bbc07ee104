"""Build script: compiles the optional fast kernel extension.

If Cython (or a C compiler) is unavailable the package still installs and
falls back to the pure-Python kernels at import time.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "socialrl._core",
                ["src/socialrl/_core.pyx"],
                # -ffp-contract=off keeps the C arithmetic bit-identical to
                # the pure-Python kernel (no FMA contraction).
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
