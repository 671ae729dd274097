"""Builds the optional compiled kernels; the package works without them."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("twwc._kernels", ["src/twwc/_kernels.pyx"], include_dirs=[numpy.get_include()])],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
