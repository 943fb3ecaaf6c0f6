"""Builds the optional compiled kernel for the recall@k loss.

The package works without the extension (a NumPy fallback is selected at
import time), so a missing compiler or Cython must not break installation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ilrkit.losses._recallk_cy",
                ["src/ilrkit/losses/_recallk_cy.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
