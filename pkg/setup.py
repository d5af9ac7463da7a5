"""Build script: compiles the optional BVH query kernel.

The package works without the extension (pure NumPy fallback is selected at
import time); building it makes collision queries roughly two orders of
magnitude faster, which matters for RL training.
"""
import numpy as np
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "cathtwin.geometry._bvhquery",
                ["src/cathtwin/geometry/_bvhquery.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
