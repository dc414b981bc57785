"""Build the optional compiled kernels.

When Cython is missing, the package installs without the extension and
falls back to ``ueplab._pykernels`` at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("ueplab._ckernels", ["src/ueplab/_ckernels.pyx"],
                   extra_compile_args=["-O3", "-ffp-contract=off"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
