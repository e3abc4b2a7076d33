# Copyright 2026 pyfedreid authors. See LICENSE file for details.

from setuptools import setup, find_packages

setup(
    name="pyfedreid",
    version="0.1.0",
    description="Simulator of federated unsupervised person re-identification",
    author="pyfedreid authors",
    license="Apache License, Version 2.0",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords=[
        "federated learning",
        "person re-identification",
        "unsupervised learning",
    ],

    packages=find_packages(),
    include_package_data=True,
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.17",
        "scipy",
        "scikit-learn",
    ],
    entry_points={
        "console_scripts": [
            "fedreid-sim = fedreid_sim.cli:main",
        ],
    },
    zip_safe=False,
    test_suite="fedreid_sim.test",
)

# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
