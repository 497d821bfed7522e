"""Build the optional Cython kernels.

The extension is optional: when Cython or a C compiler is missing the
package installs without it and ``fodwb._backend`` falls back to the
numpy implementations in ``fodwb._kernels_py``.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FODWB_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "fodwb._kernels",
                    ["src/fodwb/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
