from setuptools import find_packages, setup


# Get version number
def getVersionNumber():
    with open("pxrdsep/VERSION", "r") as vfile:
        version = vfile.read().strip()
    return version


__version__ = getVersionNumber()

DESCRIPTION = "Decomposition of multiphase powder diffraction patterns"
LONG_DESCRIPTION = """
``pxrdsep`` separates a measured multiphase powder X-ray diffraction
pattern into the single-phase patterns it is made of. It bundles the
whole workflow needed to train and apply the decomposition network:

  - A powder pattern simulator that renders libraries of single-phase
    patterns from CIF files with randomized instrument and sample effects.
  - Online synthesis of multiphase training mixtures with known ground
    truth and crystal-disjoint train/validation/test splits.
  - A small autograd engine and the two-stage training procedure
    (masked-reconstruction pretraining, then permutation-invariant
    decomposition training).
  - Evaluation by peak-level metrics, phase fractions and reference
    retrieval, plus a ``pxrdsep`` command line that drives every step.
"""

# Testing requirements
tests_require = ["pytest", "pytest-cov", "pytest-xdist", "ray"]

setup(
    name="pxrdsep",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    package_data={"pxrdsep": ["VERSION"]},
    version=__version__,
    license="MIT",
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    python_requires=">=3.9",
    install_requires=[
        "gemmi>=0.5.5, <=0.6.7",
        "pandas>=2.2.2, <=2.2.3",
        "numpy",
        "scipy",
        "ipython",
        "msgpack",
    ],
    setup_requires=["pytest-runner"],
    tests_require=tests_require,
    extras_require={
        "dev": tests_require,
        "parallel": ["ray"],
    },
    entry_points={
        "console_scripts": [
            "pxrdsep=pxrdsep.commandline.main:main",
        ]
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Chemistry",
        "Topic :: Scientific/Engineering :: Physics",
        "Programming Language :: Python",
    ],
)
