import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("FLOWCOMM_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        extensions = [
            Extension(
                "flowcomm._ckernels",
                ["src/flowcomm/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: keeps sums bitwise equal to the numpy fallback
                extra_compile_args=["-O3", "-fopenmp", "-ffp-contract=off"],
                extra_link_args=["-fopenmp"],
                optional=True,
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
