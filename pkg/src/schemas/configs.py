"""Run configuration models, read from keyed TOML files."""

import tomllib
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.core.config import (
    DEFAULT_BOOTSTRAP_ITERATIONS,
    DEFAULT_FOLD_COUNT,
    DEFAULT_MAX_SEQUENCE_LENGTH,
    DEFAULT_PREVALENCE_THRESHOLD,
    DEFAULT_TEST_FRACTION,
)
from src.core.exceptions import ConfigError, MissingInputError
from src.core.manifest import canonical_hash

# Class prevalences per preset: (delirium, coma, mortality)
PRESETS = {
    "brain_acuity": (0.06, 0.09, 0.03),
    "delirium": (0.08, 0.09, 0.03),
}


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class VariableDeclaration(StrictModel):
    name: str
    kind: Literal["Vital", "Lab", "Medication", "Score"]
    unit: str = ""


class SynthConfig(StrictModel):
    """Synthetic cohort shape and planted signal."""

    patients: int = Field(default=200, ge=1)
    seed: Optional[int] = None
    preset: Literal["brain_acuity", "delirium"] = "brain_acuity"
    delirium_rate: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    coma_rate: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    mortality_rate: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    signal_strength: float = Field(default=1.0, ge=0.0, le=1.0)
    events_per_hour: float = Field(default=1.0, gt=0.0, le=12.0)
    lab_count: int = Field(default=8, ge=0)
    medication_count: int = Field(default=6, ge=0)
    los_median_days: float = Field(default=8.0, gt=0.0)
    los_sigma: float = Field(default=0.6, gt=0.0)
    readmission_rate: float = Field(default=0.1, ge=0.0, le=1.0)
    unassessed_shift_rate: float = Field(default=0.02, ge=0.0, lt=1.0)

    @property
    def rates(self) -> tuple:
        """(delirium, coma, mortality) after applying overrides to the preset."""
        delirium, coma, mortality = PRESETS[self.preset]
        return (
            delirium if self.delirium_rate is None else self.delirium_rate,
            coma if self.coma_rate is None else self.coma_rate,
            mortality if self.mortality_rate is None else self.mortality_rate,
        )

    @model_validator(mode="after")
    def _rates_feasible(self) -> "SynthConfig":
        if sum(self.rates) >= 1.0:
            raise ValueError("delirium, coma and mortality rates must sum to less than 1")
        return self


class PrepareConfig(StrictModel):
    task: Literal["brain_acuity", "delirium"] = "brain_acuity"
    prevalence_threshold: float = Field(default=DEFAULT_PREVALENCE_THRESHOLD, gt=0.0, lt=1.0)
    max_sequence_length: int = Field(default=DEFAULT_MAX_SEQUENCE_LENGTH, ge=1)
    fold_count: int = Field(default=DEFAULT_FOLD_COUNT, ge=2)
    test_fraction: float = Field(default=DEFAULT_TEST_FRACTION, ge=0.0, lt=1.0)
    tabular: bool = False
    variables: Optional[List[VariableDeclaration]] = None


class ModelConfig(StrictModel):
    """Transformer size, attention variant and output head."""

    d_model: int = Field(default=32, ge=1)
    layers: int = Field(default=2, ge=1)
    heads: int = Field(default=4, ge=1)
    ffn_dim: int = Field(default=64, ge=1)
    static_dim: int = Field(default=32, ge=1)
    attention: Literal["full", "sliding_window_global"] = "full"
    window: int = Field(default=16, ge=0)
    global_tokens: int = Field(default=1, ge=0)
    positional: Optional[bool] = None
    max_positions: int = Field(default=DEFAULT_MAX_SEQUENCE_LENGTH, ge=1)
    head: Literal["four_class", "binary_delirium"] = "four_class"
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _shapes(self) -> "ModelConfig":
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")
        if self.attention == "sliding_window_global" and self.window < 1:
            raise ValueError("window must be at least 1 for sliding-window attention")
        return self

    @property
    def use_positions(self) -> bool:
        """Order positions default to on for the masked-attention variant only."""
        if self.positional is None:
            return self.attention == "sliding_window_global"
        return self.positional

    @property
    def class_count(self) -> int:
        return 4 if self.head == "four_class" else 1


class TrainingConfig(StrictModel):
    learning_rate: float = Field(default=1e-3, ge=0.0)
    batch_size: int = Field(default=64, ge=1)
    max_epochs: int = Field(default=30, ge=1)
    patience: int = Field(default=5, ge=1)
    grad_clip: Optional[float] = Field(default=None, gt=0.0)
    class_weighting: bool = True
    class_weight_cap: float = Field(default=10.0, ge=1.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)


class EvaluationConfig(StrictModel):
    folds: Optional[int] = Field(default=None, ge=1)
    bootstrap_iterations: int = Field(default=DEFAULT_BOOTSTRAP_ITERATIONS, ge=1)
    ci_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    include_normal_in_mean: bool = False
    patient_level_bootstrap: bool = False
    max_redraws: int = Field(default=100, ge=1)
    export_curves: bool = True


class RunConfig(StrictModel):
    """Every section of a run configuration file; all sections are optional."""

    synth: SynthConfig = SynthConfig()
    prepare: PrepareConfig = PrepareConfig()
    model: ModelConfig = ModelConfig()
    training: TrainingConfig = TrainingConfig()
    evaluation: EvaluationConfig = EvaluationConfig()

    @property
    def hash(self) -> str:
        return config_hash(self)


def config_hash(model: BaseModel) -> str:
    """SHA-256 of the canonical JSON dump of a validated config."""
    return canonical_hash(model.model_dump(mode="json"))


def load_run_config(path: Optional[Path]) -> RunConfig:
    """Parse and validate a TOML run configuration; ``None`` gives the defaults.

    Raises:
        MissingInputError: If ``path`` does not exist.
        ConfigError: If the file is not valid TOML or fails validation.
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path.name}: invalid TOML ({exc})") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in exc.errors()
        )
        raise ConfigError(f"{path.name}: {problems}") from exc


def with_overrides(config: BaseModel, **overrides) -> BaseModel:
    """Copy of a config with non-``None`` overrides, re-validated."""
    values = {key: value for key, value in overrides.items() if value is not None}
    if not values:
        return config
    try:
        return type(config).model_validate({**config.model_dump(), **values})
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
