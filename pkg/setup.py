"""Build script: compiles the optional Cython kernel extension.

python setup.py build_ext --inplace      # local development
pip install -e . --no-build-isolation    # editable install

If Cython or a C compiler is unavailable the extension is skipped and the
package falls back to the pure-numpy kernels at import time.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "relurate._kernels._ckern",
                sources=["src/relurate/_kernels/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
