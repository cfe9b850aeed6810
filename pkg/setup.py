from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="panelspec",
    version="0.1.0",
    packages=find_packages(include=["panelspec", "panelspec.*"]),
    install_requires=[
        "numpy>=1.24.0,<3.0.0",
        "scipy>=1.10.0,<2.0.0",
        "pandas>=2.0.0,<3.0.0",
        "pydantic>=2.0.0,<3.0.0",
        "python-dotenv>=0.21.0",
        "dataclasses-json>=0.5.7,<1.0.0",
        "click>=8.1.3,<9.0.0",
        "requests>=2.28.2,<3.0.0",
        "colorama>=0.4.4",
        "psutil>=5.8.0",
        "tqdm>=4.65.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "requests-mock>=1.11.0",
        ],
    },
    description="panelspec: consistent series specification tests for fixed-effects panel data models",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "panelspec=panelspec.runner:cli",
        ],
    },
    package_data={
        "panelspec": ["py.typed"],
    },
)
