import os.path
from distutils.core import setup

setup(
    name="dfmheat",
    version="0.1dev",
    description="Heat transport upscaling for discrete fracture-matrix reservoir models",
    packages=[
        "dfmheat",
        "dfmheat.models",
        "dfmheat.utils",
        "dfmheat.vis",
        "dfmheat.io",
        "dfmheat.run",
    ],
    package_data={
        "dfmheat": [
            os.path.join("data", "scenarios", "*.yml"),
        ]
    },
    scripts=[
        "bin/dfmheat",
    ],
)
