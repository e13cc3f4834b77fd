"""Build script for the optional Cython n-gram kernel.

The extension is optional: if it fails to build (or was never built), the
package falls back to the pure-Python kernel in fablemt.bleu._ngram_py.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("fablemt.bleu._ngram", ["src/fablemt/bleu/_ngram.pyx"])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

for ext in ext_modules:
    ext.optional = True

setup(ext_modules=ext_modules)
