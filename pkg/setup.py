"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs; the
pure-Python kernels in ``gepgame._fallback`` are used instead.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("GEPGAME_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "gepgame._kernels",
                    ["src/gepgame/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O2"],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
