"""Build script: compiles the optional fast kernels extension.

The package works without the extension (a pure numpy fallback is selected
at import time), so any failure to build it is non-fatal.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "polyvae.nn.kernels._fast",
        ["src/polyvae/nn/kernels/_fast.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except Exception as exc:  # noqa: BLE001 - extension is optional
    print(f"polyvae: skipping fast kernels extension ({exc})")
    ext_modules = []

setup(ext_modules=ext_modules)
