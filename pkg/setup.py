import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "mbtdesign._moments",
        ["src/mbtdesign/_moments.pyx"],
        include_dirs=[np.get_include()],
        # limited-range complex multiply skips the C99 NaN/Inf recovery path
        extra_compile_args=["-O3", "-fcx-limited-range"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
