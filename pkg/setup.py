from setuptools import setup, find_packages

setup(
    name="acuity-model",
    version="0.2.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    python_requires=">=3.11",
    install_requires=[
        "python-dotenv>=1.0.0",
        "pandas>=2.1.4",
        "numpy>=1.26.2",
        "scipy>=1.11.0",
        "scikit-learn>=1.3.0",
        "joblib>=1.3.0",
        "click>=8.1.0",
        "pydantic>=2.5.2",
        "structlog>=23.2.0",
        "tqdm>=4.66.1",
    ],
    extras_require={
        "dev": [
            "black>=23.11.0",
            "isort>=5.12.0",
            "flake8>=6.1.0",
            "mypy>=1.7.0",
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "pytest-mock>=3.12.0",
            "pytest-xdist>=3.3.1",
            "pytest-timeout>=2.1.0",
            "factory-boy>=3.3.0",
        ],
        "docs": [
            "mkdocs>=1.5.0",
            "mkdocs-material>=9.0.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "acuity-model=src.cli:main",
        ],
    },
    description="Brain acuity prediction for ICU shifts from irregular EHR time series",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    keywords="icu, delirium, coma, ehr, transformer, time series",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Medical Science Apps.",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.11",
    ],
)
