from setuptools import Extension, setup

# The compiled kernel core is optional: if Cython (or a C compiler) is
# unavailable the package installs anyway and falls back to the NumPy
# implementations in ergomix._kernels_py.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ergomix._kernels",
                ["src/ergomix/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
