"""
A setuptools based setup module.

See:
https://packaging.python.org/en/latest/distributing.html
"""

# Always prefer setuptools over distutils
from setuptools import setup, find_packages

# To use a consistent encoding
from codecs import open  # pylint: disable=redefined-builtin
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, "pypi_README.md"), encoding="utf-8") as f:
    long_description = f.read()

exec(open(path.join(here, "iada/version.py")).read())

setup(
    name="iada",
    # Versions should comply with PEP440.
    version=__version__,  # noqa: F821
    description="Incremental adversarial domain adaptation with source distribution modelling",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="",
    author_email="",
    license="MIT",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords="domain adaptation adversarial training continual learning",
    packages=find_packages(exclude=["contrib", "conf", "docs", "tests", "examples", "examples.*"]),
    include_package_data=True,
    data_files=[
        ("/etc/iada", ["conf/iada.conf.example"]),
    ],
    install_requires=["torch", "numpy", "matplotlib"],
    extras_require={
        "dev": ["check-manifest", "flake8"],
        "test": ["coverage"],
    },
    entry_points={
        "console_scripts": [
            "iada=iada:main",
        ],
    },
    test_suite="tests.get_tests",
)
