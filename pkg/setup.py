# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""
# Min version                  : pip3 install -e .
# Full version                 : pip3 install -e .["full"]
# Document version             : pip3 install -e .["doc"]
"""

from setuptools import setup, find_packages
import re

with open('README.md', 'r') as fh:
    long_description = fh.read()
_deps = [
    "numpy>=1.24.0",
    "scipy>=1.10.0",
    "scikit-learn>=1.4.1",
    "ruff>=0.7.2",
    "pandas>=1.5.0",
    "sortedcontainers>=2.4.0",
    "networkx>=3.0",
    "pyyaml>=6.0",
    "tqdm>=4.64.0",
    "pytest>=7.2.2",
    "hypothesis>=6.80.0",
    "sphinx>=7.2.6",
    "sphinx-autoapi>=3.0.0",
    "sphinx_rtd_theme>=2.0.0",
    "sphinx-theme>=1.0",
    "myst-parser>=2.0.0",
    "flake8>=6.0.0"]

deps = {b: a for a, b in (re.findall(r"^(([^!=<>~ ]+)(?:[!=<>~ ].*)?$)", x)[0] for x in _deps)}


def deps_list(*pkgs):
    return [deps[pkg] for pkg in pkgs]


extras = dict()
extras["min"] = deps_list(
    "numpy",
    "scipy",  # linprog cross-check of the capacity program
    "scikit-learn",  # drift bound fit
    "pandas",
    "sortedcontainers",  # ORCD frontier
    "networkx",
    "pyyaml",
    "tqdm")

extras["doc"] = (deps_list("sphinx",
                           "sphinx-autoapi",
                           "sphinx-theme",
                           "sphinx_rtd_theme",
                           "myst-parser"))

extras["full"] = (extras["min"] + deps_list("pytest", "hypothesis", "ruff", "flake8"))

setup(
    name="oprouting",
    description="OpRouting implements, simulates and verifies throughput-optimal priority-based opportunistic "
                "routing policies (backpressure, ORCD and weight-function cone policies) for wireless networks.",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"oprouting": ["*.conf"]},
    install_requires=extras["min"],
    extras_require=extras,
    author='OpRouting Team',
    classifiers=[
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Topic :: System :: Networking"],
    python_requires='>=3.10',
    entry_points={"console_scripts": ["oprouting=oprouting.scripts.run:main"]},
    long_description=long_description,
    long_description_content_type="text/markdown",
)
