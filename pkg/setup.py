from setuptools import Extension, setup
from Cython.Build import cythonize

# No -ffast-math / -march=native: the solver must give bit-identical results
# from run to run, so IEEE semantics are kept.
extensions = [
    Extension(
        "edgepart._backend._solver_core",
        ["src/edgepart/_backend/_solver_core.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
