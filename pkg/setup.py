import re

from setuptools import setup, find_packages

with open("mellinbranch/version.py") as handle:
    version = re.search(r'__version__ = "([^"]+)"', handle.read()).group(1)

setup(
    name="mellinbranch",
    description="Mellin transforms, stable laws and limit laws of branching processes.",
    version=version,
    license="Apache 2.0",
    packages=find_packages(exclude=("mellinbranch.tests",)),
    keywords=["mellin transform", "stable distribution", "branching process",
              "bellman-harris", "luria-delbruck", "mittag-leffler"],
    install_requires=["numpy>=1.22", "scipy>=1.8", "mpmath", "tqdm", "pydantic>=2"],
    extras_require={"tests": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["mellinbranch=mellinbranch.cli:main"]},
    package_data={"": ["README.md"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: POSIX",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ]
)
