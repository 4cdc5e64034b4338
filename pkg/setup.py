"""
Setup configuration for nuv-binning

Binning strategies for the normalized unexplained variance template matching measure
"""

from setuptools import setup, find_packages
import os
import sys

# Ensure Python 3.8+
if sys.version_info < (3, 8):
    sys.exit("nuv-binning requires Python 3.8 or higher.")

# Read the README for long description
def read_long_description():
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()

# Read version from the package __init__.py
def get_version():
    init_file = os.path.join("src", "nuv_binning", "__init__.py")
    with open(init_file, "r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("__version__"):
                return line.split("=")[1].strip().strip('"').strip("'")
    return "0.1.0"

setup(
    name="nuv-binning",
    version=get_version(),
    author="nuv-binning contributors",
    description="Template binning, expected-value predictors and Monte-Carlo evaluation for the nUV/MTM dissimilarity",
    long_description=read_long_description(),
    long_description_content_type="text/markdown",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
        "Topic :: Scientific/Engineering :: Image Recognition",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Operating System :: OS Independent",
        "Environment :: Console",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.7",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "hypothesis>=6.0.0",
            "black>=23.0.0",
            "mypy>=1.0.0",
            "isort>=5.11.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "nuv-binning=nuv_binning.cli:main",
            "nuvb=nuv_binning.cli:main",  # Short alias
        ],
    },
    keywords=[
        "template-matching",
        "matching-by-tone-mapping",
        "binning",
        "k-means",
        "dissimilarity",
        "monte-carlo",
    ],
    platforms=["any"],
    zip_safe=False,
    license="MIT",
)
