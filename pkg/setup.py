import os

from setuptools import setup

# DAGRCA_NO_EXT=1 skips the compiled kernels (pure numpy fallback only).
# DAGRCA_PORTABLE=1 drops -march=native for builds shipped to other hosts.
ext_modules = []
if os.environ.get("DAGRCA_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        flags = ["-O3", "-fno-trapping-math", "-fno-signed-zeros", "-fassociative-math"]
        if os.environ.get("DAGRCA_PORTABLE", "") in ("", "0"):
            flags.append("-march=native")
        ext_modules = cythonize(
            [
                Extension(
                    "dagrca._kernels",
                    ["src/dagrca/_kernels.pyx"],
                    include_dirs=[np.get_include(), "src/dagrca"],
                    depends=["src/dagrca/_mlp_core.h"],
                    extra_compile_args=flags,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
