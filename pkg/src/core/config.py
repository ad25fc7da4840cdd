"""Configuration module for the brain acuity toolkit."""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Project paths
PROJECT_ROOT = Path(__file__).parent.parent.parent
SRC_DIR = PROJECT_ROOT / "src"

TOOL_NAME = "acuity-model"
TOOL_VERSION = "0.2.0"

# Logging configuration
LOG_LEVEL = os.getenv("ACUITY_LOG_LEVEL", "INFO").upper()
LOG_RENDERER = os.getenv("ACUITY_LOG_FORMAT", "console").lower()
LOG_FILE: Optional[str] = os.getenv("ACUITY_LOG_FILE") or None
LOG_FORMAT = "%(message)s"

# Runtime defaults, overridable by CLI flags
DEFAULT_SEED = int(os.getenv("ACUITY_SEED", "42"))
DEFAULT_THREADS = int(os.getenv("ACUITY_THREADS", "1"))

# Clinical time constants (minutes)
SHIFT_MINUTES = 720
CARRY_FORWARD_MINUTES = 720
ENCOUNTER_MERGE_GAP_MINUTES = 1440
SHIFT_ANCHOR_HOUR = 7

# Pipeline defaults
DEFAULT_MAX_SEQUENCE_LENGTH = 12000
DEFAULT_PREVALENCE_THRESHOLD = 0.05
DEFAULT_FOLD_COUNT = 5
DEFAULT_TEST_FRACTION = 0.2
DEFAULT_BOOTSTRAP_ITERATIONS = 10

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
LOG_RENDERERS = ["console", "json"]


def validate_config() -> None:
    """Validate the configuration settings."""
    problems = []
    if LOG_LEVEL not in LOG_LEVELS:
        problems.append(f"ACUITY_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")
    if LOG_RENDERER not in LOG_RENDERERS:
        problems.append(f"ACUITY_LOG_FORMAT must be one of {', '.join(LOG_RENDERERS)}")
    if DEFAULT_THREADS < 1:
        problems.append("ACUITY_THREADS must be at least 1")

    if problems:
        raise ValueError(f"Invalid environment configuration: {'; '.join(problems)}")
