"""Synthetic cohort generation."""

from src.data_collection.generators.synthetic_cohort import (
    LABELS_FILE,
    SyntheticCohort,
    SyntheticCohortGenerator,
    build_catalog,
    describe,
    generate,
)

__all__ = [
    "LABELS_FILE",
    "SyntheticCohort",
    "SyntheticCohortGenerator",
    "build_catalog",
    "describe",
    "generate",
]
