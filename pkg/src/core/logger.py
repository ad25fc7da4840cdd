"""Logging module for the brain acuity toolkit."""

import logging
import sys
from logging.handlers import RotatingFileHandler
from typing import Any

import structlog

from src.core.config import LOG_FILE, LOG_FORMAT, LOG_LEVEL, LOG_RENDERER

_configured = False


def _configure(level: str = LOG_LEVEL, renderer: str = LOG_RENDERER) -> None:
    """Wire structlog onto the standard library handlers once per process."""
    global _configured

    root = logging.getLogger("acuity")
    root.setLevel(level)
    root.handlers.clear()
    root.propagate = False

    formatter = logging.Formatter(LOG_FORMAT)

    # Console output goes to stderr so command output on stdout stays clean
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root.addHandler(console_handler)

    if LOG_FILE:
        file_handler = RotatingFileHandler(
            LOG_FILE, maxBytes=10 * 1024 * 1024, backupCount=5, encoding="utf-8"  # 10MB
        )
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    final_processor: Any
    if renderer == "json":
        final_processor = structlog.processors.JSONRenderer(sort_keys=True)
    else:
        final_processor = structlog.dev.ConsoleRenderer(colors=False)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            final_processor,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )
    _configured = True


def setup_logger(name: str = "acuity") -> structlog.stdlib.BoundLogger:
    """Set up and configure logger.

    Args:
        name: The name of the logger. Names outside the ``acuity`` hierarchy
            are nested under it so they share its handlers.

    Returns:
        A configured structlog logger bound to ``name``.
    """
    if not _configured:
        _configure()
    if not name.startswith("acuity"):
        name = f"acuity.{name}"
    return structlog.get_logger(name)


def set_level(level: str, renderer: str = LOG_RENDERER) -> None:
    """Reconfigure the level and renderer, e.g. from CLI flags."""
    _configure(level.upper(), renderer)


# Create and configure the default logger
logger = setup_logger()


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a logger instance with the specified name.

    Args:
        name: The name of the logger.

    Returns:
        A configured logger instance.
    """
    return setup_logger(name)
