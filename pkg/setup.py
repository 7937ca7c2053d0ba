from setuptools import setup

setup(
    name="dalat",
    version="0.1.0",
    description="Discrete analytic functions on rhombic lattices",
    py_modules=[
        "config",
        "errors",
        "lattice",
        "series",
        "calculus",
        "realization",
        "rational",
        "exporter",
        "verify",
        "main",
    ],
    python_requires=">=3.9",
    install_requires=[
        "python-dotenv>=1.0.0",
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "click>=8.1.0",
    ],
    entry_points={"console_scripts": ["dalat=main:cli"]},
)
