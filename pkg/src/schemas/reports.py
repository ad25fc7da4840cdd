"""Evaluation report schema."""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ReportModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MetricEstimate(ReportModel):
    """Mean over all fold x bootstrap repetitions with its percentile interval.

    A bound the mean falls outside of (heavily skewed repetitions) is moved to the
    mean, so ``ci_low <= point <= ci_high`` always holds.
    """

    point: float
    ci_low: float
    ci_high: float
    repetitions: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "MetricEstimate":
        if not self.ci_low <= self.point <= self.ci_high:
            raise ValueError("expected ci_low <= point <= ci_high")
        return self


class FoldSummary(ReportModel):
    fold: int
    train_shifts: int
    validation_shifts: int
    test_shifts: int
    thresholds: Dict[str, float]
    default_thresholds: List[str] = Field(default_factory=list)
    test_auroc: Dict[str, Optional[float]]
    mean_test_auroc: Optional[float] = None
    details: Dict[str, Any] = Field(default_factory=dict)


class EvaluationReport(ReportModel):
    """What ``evaluate`` writes as ``report.json``.

    ``metrics[class][metric]`` is ``None`` when the metric stayed undefined
    after redraws; ``undefined`` lists those ``class/metric`` pairs and the
    classes left out of the mean.
    """

    task: str
    model: str
    head: str
    config_hash: str
    seed: int
    tool_version: str
    vocabulary_hash: str
    classes: List[str]
    bootstrap_iterations: int
    ci_level: float
    patient_level_bootstrap: bool
    folds: List[FoldSummary]
    metrics: Dict[str, Dict[str, Optional[MetricEstimate]]]
    confusion: Optional[List[List[Optional[float]]]] = None
    confusion_classes: Optional[List[str]] = None
    undefined: List[str] = Field(default_factory=list)
