"""Check the ACUITY_* environment before a long run."""

from src.core import config
from src.core.logger import logger


def check_environment() -> bool:
    """Validate log level, log format and thread count from the environment."""
    try:
        config.validate_config()
    except ValueError as exc:
        logger.error("environment_invalid", error=str(exc))
        return False
    logger.info(
        "environment_ok",
        log_level=config.LOG_LEVEL,
        log_format=config.LOG_RENDERER,
        log_file=config.LOG_FILE,
        seed=config.DEFAULT_SEED,
        threads=config.DEFAULT_THREADS,
    )
    return True


def check_run_config(path: str) -> bool:
    """Parse a TOML run configuration and report its hash."""
    from src.core.exceptions import AcuityError
    from src.schemas.configs import load_run_config

    try:
        run = load_run_config(path)
    except AcuityError as exc:
        logger.error("run_config_invalid", path=path, error=str(exc))
        return False
    logger.info("run_config_ok", path=path, config_hash=run.hash)
    return True


if __name__ == "__main__":
    import sys

    ok = check_environment()
    for argument in sys.argv[1:]:
        ok = check_run_config(argument) and ok
    sys.exit(0 if ok else 1)
