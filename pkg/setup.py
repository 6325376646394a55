import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HONESTRD_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        Extension(
            "honestrd._kernels",
            ["src/honestrd/_kernels.pyx"],
            include_dirs=[np.get_include()],
        ),
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
