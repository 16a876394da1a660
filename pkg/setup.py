"""Build the optional compiled kernel extension.

The package works without it (a pure-Python backend is selected at import
time), so a failed extension build should not block installation:
``SEARCHSCAFFOLD_SKIP_EXT=1 pip install .`` skips compilation entirely.
"""

import os

from setuptools import Extension, setup

if os.environ.get("SEARCHSCAFFOLD_SKIP_EXT"):
    setup()
else:
    from Cython.Build import cythonize

    setup(
        ext_modules=cythonize(
            [
                Extension(
                    "searchscaffold.kernels._ckernels",
                    ["src/searchscaffold/kernels/_ckernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    )
