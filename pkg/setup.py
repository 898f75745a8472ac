import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SOFTNEAT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "softneat.sim._kernel",
                    ["src/softneat/sim/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math / -march=native: the kernel must match the
                    # numpy fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-builtin"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
