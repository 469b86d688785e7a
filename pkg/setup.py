#!/usr/bin/env python3
"""Setup script for SP-Mamba."""

from setuptools import setup, find_packages

# Read version from __init__.py
version = {}
with open("spmamba/__init__.py") as f:
    for line in f:
        if line.startswith("__version__"):
            exec(line, version)
            break

# Read README
with open("README.md", encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="spmamba",
    version=version.get("__version__", "0.1.0"),
    author="SP-Mamba Team",
    description="SP-Mamba - spatial-perception state space anomaly detection",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Image Recognition",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "scikit-learn>=1.3",
        "Pillow>=10.0.0",
        "pydantic>=2.0.0",
        "pydantic-settings>=2.0.0",
        "PyYAML>=6.0.0",
        "structlog>=23.0.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
            "mypy>=1.4.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "spmamba=spmamba.cli:main",
        ],
    },
    include_package_data=True,
    package_data={
        "": ["config/*.yaml.example"],
    },
)
