import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the integer kernel if a toolchain exists; otherwise install anyway.

    The package selects a NumPy fallback at import time when the compiled
    kernel is missing, so a failed extension build must not block install.
    """

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:
            print(f"warning: skipping compiled kernel ({exc}); NumPy fallback will be used")

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            print(f"warning: could not compile {ext.name} ({exc}); NumPy fallback will be used")


ext_modules = []
if os.environ.get("ESAD_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "esad.kernels._intcore",
                    ["src/esad/kernels/_intcore.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("warning: Cython not available; NumPy fallback will be used")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
