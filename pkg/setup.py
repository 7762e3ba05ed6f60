from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qmsirr._ckernels",
                ["src/qmsirr/_ckernels.pyx"],
                extra_compile_args=["-O3", "-ffast-math"],
                extra_link_args=["-lmvec", "-lm"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
