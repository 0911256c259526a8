import os
import warnings

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    warnings.warn("Cython or numpy not found; installing the pure-Python kernels only.")
    cythonize = None

extensions = []
if cythonize is not None and os.environ.get("FACTORLD_NO_EXT", "") != "1":
    extensions = cythonize(
        [
            Extension(
                "factorld._kernels",
                ["src/factorld/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=extensions)
