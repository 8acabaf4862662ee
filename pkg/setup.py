"""Build script: compiles the optional recursion kernels.

The extension is optional; if Cython or a C compiler is unavailable (or
SYMID_SKIP_EXTENSION is set) the package installs pure-Python and the
numpy fallback kernels are selected at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SYMID_SKIP_EXTENSION"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "symid._kernels",
                    ["src/symid/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
