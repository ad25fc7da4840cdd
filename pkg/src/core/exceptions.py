"""Error hierarchy shared by the pipeline, model and CLI."""

from typing import Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class AcuityError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = EXIT_RUNTIME


class ConfigError(AcuityError):
    """Raised when a run configuration is malformed or infeasible."""

    exit_code = EXIT_CONFIG


class InputValidationError(AcuityError):
    """Raised when input data violates a documented contract."""

    exit_code = EXIT_CONFIG


class MissingInputError(AcuityError):
    """Raised when a required input file is absent."""

    exit_code = EXIT_CONFIG

    def __init__(self, path: str):
        super().__init__(f"Required input file not found: {path}")
        self.path = path


class UndefinedMetricError(AcuityError):
    """Raised when a metric is not defined for the given labels."""


class TrainingDivergedError(AcuityError):
    """Raised when training produces a non-finite loss or activation."""

    def __init__(
        self, message: str, layer: Optional[int] = None, epoch: Optional[int] = None
    ):
        details = []
        if layer is not None:
            details.append(f"layer={layer}")
        if epoch is not None:
            details.append(f"epoch={epoch}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")
        self.layer = layer
        self.epoch = epoch


class VocabularyMismatchError(AcuityError):
    """Raised when a checkpoint and a dataset disagree on the feature vocabulary."""


class CheckpointError(AcuityError):
    """Raised when a checkpoint file cannot be read."""
