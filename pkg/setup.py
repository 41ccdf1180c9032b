"""Build script: compiles the optional conic kernel extension.

The package works without the extension (numpy fallback is selected at
import time), so a failed compile only costs speed, not functionality.
"""

import os

from setuptools import Extension, setup

PYX = "src/aircov/conic/_kernels_cy.pyx"

extensions = []
if os.path.exists(PYX):
    try:
        import numpy
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "aircov.conic._kernels_cy",
                    [PYX],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API",
                                    "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=extensions)
