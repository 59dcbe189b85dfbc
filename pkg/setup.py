import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GUPSIM_NO_EXT", "") not in ("1", "true", "yes"):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        # pure-Python install; gupsim.kernels falls back to numpy
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "gupsim._ckernels",
                    ["src/gupsim/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
