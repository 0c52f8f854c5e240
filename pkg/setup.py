from setuptools import setup, Extension
from Cython.Build import cythonize

ext_modules = cythonize(
    [Extension("mira._speedups", ["src/mira/_speedups.pyx"])],
    language_level=3,
)

setup(ext_modules=ext_modules)
