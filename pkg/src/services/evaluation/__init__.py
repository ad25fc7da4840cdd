"""Evaluation metrics and bootstrap confidence intervals.

Cross validation lives in :mod:`src.services.evaluation.cross_validation`
and report I/O in :mod:`src.services.evaluation.report`.
"""

from src.services.evaluation.bootstrap import Estimate, bootstrap_ci, summarize
from src.services.evaluation.metrics import (
    METRIC_NAMES,
    mean_auroc,
    one_vs_rest,
    pr_auc,
    recall_confusion,
    roc_auc,
    select_threshold,
    threshold_metrics,
)

__all__ = [
    "Estimate",
    "bootstrap_ci",
    "summarize",
    "METRIC_NAMES",
    "mean_auroc",
    "one_vs_rest",
    "pr_auc",
    "recall_confusion",
    "roc_auc",
    "select_threshold",
    "threshold_metrics",
]
