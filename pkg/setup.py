"""Build script: compiles the hot-loop kernel when Cython is available.

The package works without the extension (a pure-numpy fallback is selected
at import time), so the build degrades gracefully on machines without a
C toolchain: run ``DIFFHMM_SKIP_EXT=1 pip install -e . --no-build-isolation``.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DIFFHMM_SKIP_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "diffhmm._kernel",
                    ["src/diffhmm/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
