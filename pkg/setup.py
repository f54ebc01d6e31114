import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback only
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("DISCBILLIARD_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "discbilliard._ckernel",
                ["src/discbilliard/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                libraries=["m"],
                # no contraction: keeps results bit-identical to the Python kernel
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
