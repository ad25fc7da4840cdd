"""Discrimination and operating-point metrics for one-vs-rest class views."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import (
    average_precision_score,
    confusion_matrix,
    precision_recall_curve,
    roc_auc_score,
    roc_curve,
)

from src.core.exceptions import InputValidationError, UndefinedMetricError
from src.models.domain.acuity import CLASS_ORDER, AcuityLabel

# Classes reported one-vs-rest for the four-class head
ABNORMAL_CLASSES = [AcuityLabel.COMA, AcuityLabel.DELIRIUM, AcuityLabel.DEAD]
METRIC_NAMES = ["auroc", "auprc", "sensitivity", "specificity", "ppv", "npv"]
THRESHOLD_METRICS = METRIC_NAMES[2:]


def _as_arrays(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputValidationError("scores and labels must be 1-D arrays of the same length")
    if not np.all(np.isin(labels, (0, 1))):
        raise InputValidationError("labels must be binary (0/1)")
    return scores, labels


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative (ties count 0.5).

    Raises:
        UndefinedMetricError: Unless both classes are present.
    """
    scores, labels = _as_arrays(scores, labels)
    if labels.min(initial=1) == labels.max(initial=0):
        raise UndefinedMetricError("AUROC needs both positive and negative examples")
    return float(roc_auc_score(labels, scores))


def pr_auc(scores, labels) -> float:
    """Average precision: precision at each positive's rank, stepwise over recall.

    Raises:
        UndefinedMetricError: If there are no positives.
    """
    scores, labels = _as_arrays(scores, labels)
    if labels.sum() == 0:
        raise UndefinedMetricError("AUPRC needs at least one positive example")
    return float(average_precision_score(labels, scores))


@dataclass(frozen=True)
class OperatingPoint:
    """Threshold metrics; ``None`` where the ratio is 0/0."""

    sensitivity: Optional[float]
    specificity: Optional[float]
    ppv: Optional[float]
    npv: Optional[float]

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "ppv": self.ppv,
            "npv": self.npv,
        }


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return None if denominator == 0 else numerator / denominator


def threshold_metrics(scores, labels, threshold: float) -> OperatingPoint:
    """Counts with predicted positive iff ``score >= threshold``."""
    scores, labels = _as_arrays(scores, labels)
    predicted = scores >= threshold
    positive = labels == 1
    tp = int(np.sum(predicted & positive))
    fp = int(np.sum(predicted & ~positive))
    tn = int(np.sum(~predicted & ~positive))
    fn = int(np.sum(~predicted & positive))
    return OperatingPoint(
        sensitivity=_ratio(tp, tp + fn),
        specificity=_ratio(tn, tn + fp),
        ppv=_ratio(tp, tp + fp),
        npv=_ratio(tn, tn + fn),
    )


def select_threshold(scores, labels) -> float:
    """Youden's J maximizer over the distinct scores.

    The lowest distinct score reaching the best J wins, and the returned
    threshold is the midpoint between it and the next lower distinct score,
    which classifies identically.

    Raises:
        UndefinedMetricError: Unless both classes are present.
    """
    scores, labels = _as_arrays(scores, labels)
    positives = int(labels.sum())
    negatives = len(labels) - positives
    if positives == 0 or negatives == 0:
        raise UndefinedMetricError("Threshold selection needs both classes")

    distinct = np.unique(scores)
    # Descending cut points so the cumulative counts give "score >= cut"
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp_cum = np.cumsum(sorted_labels)
    fp_cum = np.cumsum(1 - sorted_labels)
    last_of_value = np.r_[np.nonzero(np.diff(sorted_scores))[0], len(sorted_scores) - 1]
    cuts = sorted_scores[last_of_value]
    youden = tp_cum[last_of_value] / positives - fp_cum[last_of_value] / negatives

    best = youden.max()
    best_cut = cuts[np.isclose(youden, best, rtol=0.0, atol=1e-12)].min()
    position = int(np.searchsorted(distinct, best_cut))
    if position == 0:
        return float(best_cut)
    return float((distinct[position - 1] + best_cut) / 2.0)


def youden_index(scores, labels, threshold: float) -> float:
    point = threshold_metrics(scores, labels, threshold)
    return (point.sensitivity or 0.0) + (point.specificity or 0.0) - 1.0


def metric_value(name: str, scores, labels, threshold: Optional[float] = None) -> float:
    """One named metric; undefined values raise instead of returning ``None``."""
    if name == "auroc":
        return roc_auc(scores, labels)
    if name == "auprc":
        return pr_auc(scores, labels)
    if name not in THRESHOLD_METRICS:
        raise InputValidationError(f"Unknown metric {name!r}")
    value = threshold_metrics(scores, labels, threshold).as_dict()[name]
    if value is None:
        raise UndefinedMetricError(f"{name} is 0/0 on these labels")
    return value


def report_classes(class_count: int, include_normal: bool = False) -> List[AcuityLabel]:
    """Classes evaluated one-vs-rest for a head with ``class_count`` outputs."""
    if class_count == 1:
        return [AcuityLabel.DELIRIUM]
    classes = list(ABNORMAL_CLASSES)
    if include_normal:
        classes = [AcuityLabel.NORMAL] + classes
    return classes


def class_column(label: AcuityLabel, class_count: int) -> int:
    """Probability column holding ``label``'s score."""
    return 0 if class_count == 1 else label.class_index


def one_vs_rest(
    probabilities: np.ndarray,
    targets: np.ndarray,
    classes: Sequence[AcuityLabel],
) -> Dict[AcuityLabel, Tuple[np.ndarray, np.ndarray]]:
    """Binary ``(scores, labels)`` view per class.

    ``targets`` are class indices for a four-column ``probabilities`` and
    0/1 delirium flags for a single column.
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    class_count = probabilities.shape[1]
    views = {}
    for label in classes:
        column = class_column(label, class_count)
        binary = targets if class_count == 1 else (targets == label.class_index).astype(np.int64)
        views[label] = (probabilities[:, column], binary)
    return views


def mean_auroc(
    views: Dict[AcuityLabel, Tuple[np.ndarray, np.ndarray]]
) -> Tuple[Optional[float], List[AcuityLabel]]:
    """Unweighted mean AUROC over the classes where it is defined, plus the undefined ones."""
    values, undefined = [], []
    for label, (scores, labels) in views.items():
        try:
            values.append(roc_auc(scores, labels))
        except UndefinedMetricError:
            undefined.append(label)
    return (float(np.mean(values)) if values else None), undefined


def recall_confusion(targets, predicted, class_count: int = len(CLASS_ORDER)) -> np.ndarray:
    """Row-normalized confusion matrix; rows of absent true classes are NaN."""
    counts = confusion_matrix(
        np.asarray(targets, dtype=np.int64),
        np.asarray(predicted, dtype=np.int64),
        labels=list(range(class_count)),
    ).astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, counts / totals, np.nan)


def roc_points(scores, labels) -> Dict[str, np.ndarray]:
    scores, labels = _as_arrays(scores, labels)
    fpr, tpr, thresholds = roc_curve(labels, scores, drop_intermediate=False)
    return {"fpr": fpr, "tpr": tpr, "threshold": thresholds}


def pr_points(scores, labels) -> Dict[str, np.ndarray]:
    scores, labels = _as_arrays(scores, labels)
    precision, recall, thresholds = precision_recall_curve(labels, scores)
    # The final (recall 0, precision 1) point has no threshold
    return {
        "recall": recall,
        "precision": precision,
        "threshold": np.r_[thresholds, np.nan],
    }
