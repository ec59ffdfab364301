from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="matta-elastic-sdk",
    version="0.1.0",
    author="MatTA Elastic contributors",
    description="Nested Student/Teaching-Assistant co-training with distillation, Shampoo preconditioning and Mix'n'Match sub-model extraction",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.24.0",
        "PyYAML>=6.0.0",
        "python-dotenv>=1.0.0",
        "Pillow>=10.0.0",
    ],
    entry_points={
        'console_scripts': [
            'matta=matta_sdk.cli.main:main',
            'matta-train=matta_sdk.cli.train:main',
            'matta-extract=matta_sdk.cli.extract:main',
            'matta-eval=matta_sdk.cli.evaluate:main',
            'matta-frontier=matta_sdk.cli.frontier:main',
            'matta-ablate=matta_sdk.cli.ablate:main',
            'matta-dump-preconditioner=matta_sdk.cli.dump_preconditioner:main',
        ],
    },
)
