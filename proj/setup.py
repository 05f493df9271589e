"""CMake-backed extension build for the pointmac package.

Configures the repository's CMake project, builds the `_core` pybind11
module, and drops it where setuptools expects the extension. Works for both
regular and editable (`pip install -e . --no-build-isolation`) installs.
"""

import shutil
import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DPOINTMAC_BUILD_TESTS=OFF",
                "-DPOINTMAC_BUILD_PYTHON=ON",
                "-DPOINTMAC_NATIVE=OFF",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core"],
            check=True,
        )

        produced = next((build_dir / "python" / "pointmac").glob("_core*.so"))
        target = Path(self.get_ext_fullpath(ext.name)).resolve()
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(produced, target)


setup(
    packages=["pointmac"],
    package_dir={"": "python"},
    ext_modules=[CMakeExtension("pointmac._core")],
    cmdclass={"build_ext": CMakeBuild},
)
