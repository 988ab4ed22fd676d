"""
Setup script for tokeneeg - enables proper imports for the project
"""
from setuptools import setup, find_packages

setup(
    name="tokeneeg",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "scikit-learn",
        "joblib",
        "orjson",
        "pydantic>=2",
        "typer",
        "rich",
        "python-dotenv",
    ],
    entry_points={"console_scripts": ["tokeneeg=src.main:app"]},
)
