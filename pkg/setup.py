"""Build the optional compiled point-location kernel.

When Cython or a C compiler is missing the package still installs and
falls back to the numpy kernel at import time.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("pwapid._ckernel", ["src/pwapid/_ckernel.pyx"],
                   include_dirs=[np.get_include()])],
        compiler_directives={"language_level": 3},
    )
except ImportError:  # pragma: no cover - build without the extension
    pass

setup(ext_modules=ext_modules)
