from setuptools import find_packages, setup
import os

setup(
    name="tada2go",
    packages=find_packages(exclude=["tests"]),
    version=os.getenv('TADA2GO_VERSION'),
    description="emulate image development pipelines to adapt JPEG steganalysis detectors to a target source",
    license="-",
    install_requires=[
        "natsort",
        "numpy",
        "pandas",
        "pillow",
        "python-dotenv",
        "scikit-learn",
        "scipy",
    ],
    entry_points={
        "console_scripts": ["tada2go=tada2go.harness.cli:main"],
    },
)
