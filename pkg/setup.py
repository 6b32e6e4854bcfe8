import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("APPROXGROUP_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # fallback backend only
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "approxgroup._ext",
                    ["src/approxgroup/_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
