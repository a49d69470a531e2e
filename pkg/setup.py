"""Build script: compiles the optional native kernel extension.

The package works without the extension (a pure NumPy/Python fallback is
selected at import time), so a failed Cython build only costs speed.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "camoseg._kernels._native",
                ["src/camoseg/_kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
