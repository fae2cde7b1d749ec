"""Builds the _ueeg pybind11 extension through the project's CMake tree."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        import pybind11

        cfg_args = [
            "cmake",
            str(Path(__file__).parent.resolve()),
            "-DUEEG_BUILD_PYTHON=ON",
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={out_dir}",
            f"-DPython_EXECUTABLE={sys.executable}",
            f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            "-DCMAKE_BUILD_TYPE=Release",
        ]
        subprocess.run(cfg_args, cwd=build_dir, check=True)
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_ueeg",
             f"-j{os.cpu_count() or 1}"],
            cwd=build_dir,
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("ueeg._ueeg")],
    cmdclass={"build_ext": CMakeBuild},
)
