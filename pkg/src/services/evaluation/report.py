"""Writing and flattening evaluation reports."""

import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.core.exceptions import InputValidationError, MissingInputError, UndefinedMetricError
from src.core.logger import get_logger
from src.core.manifest import write_json_atomic
from src.data_collection.utils.ehr_csv_loader import write_csv
from src.models.domain.acuity import AcuityLabel
from src.schemas.reports import EvaluationReport
from src.services.evaluation.metrics import one_vs_rest, pr_points, roc_points

logger = get_logger(__name__)

REPORT_FILE = "report.json"
PREDICTIONS_FILE = "predictions.csv"
METRICS_FILE = "metrics.csv"
METRIC_COLUMNS = ["class", "metric", "point", "ci_low", "ci_high", "repetitions", "defined"]


def write_report(report: EvaluationReport, out_dir: Path) -> Path:
    """``report.json`` with sorted keys; contains no timings."""
    path = Path(out_dir) / REPORT_FILE
    write_json_atomic(path, report.model_dump(mode="json"))
    return path


def load_report(path: Path) -> EvaluationReport:
    """Read and validate a ``report.json`` (a directory holding one also works)."""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    if not path.exists():
        raise MissingInputError(str(path))
    try:
        with open(path, encoding="utf-8") as handle:
            return EvaluationReport.model_validate(json.load(handle))
    except (json.JSONDecodeError, ValueError) as exc:
        raise InputValidationError(f"{path} is not a valid evaluation report: {exc}") from exc


def flatten_report(report: EvaluationReport) -> pd.DataFrame:
    """One row per class x metric; undefined metrics keep a row with empty values."""
    rows = []
    for class_name, metrics in report.metrics.items():
        for metric, estimate in metrics.items():
            if estimate is None:
                rows.append([class_name, metric, None, None, None, 0, False])
            else:
                rows.append([
                    class_name, metric, estimate.point, estimate.ci_low,
                    estimate.ci_high, estimate.repetitions, True,
                ])
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def confusion_frame(report: EvaluationReport) -> Optional[pd.DataFrame]:
    if report.confusion is None:
        return None
    names = report.confusion_classes
    return pd.DataFrame(report.confusion, index=pd.Index(names, name="true"), columns=names)


def write_predictions(predictions: pd.DataFrame, out_dir: Path) -> Path:
    return write_csv(predictions, Path(out_dir) / PREDICTIONS_FILE)


def load_predictions(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    return pd.read_csv(path)


def curve_frames(
    probabilities: np.ndarray, targets: np.ndarray, classes: List[AcuityLabel]
) -> Dict[str, pd.DataFrame]:
    """ROC and PR points per class, keyed ``roc_<class>`` / ``pr_<class>``.

    Classes absent from ``targets`` (or present everywhere) have no curve.
    """
    frames = {}
    for label, (scores, labels) in one_vs_rest(probabilities, targets, classes).items():
        if len(np.unique(labels)) < 2:
            logger.warning("curve_skipped", label=label.value, reason="single class")
            continue
        frames[f"roc_{label.value}"] = pd.DataFrame(roc_points(scores, labels))
        frames[f"pr_{label.value}"] = pd.DataFrame(pr_points(scores, labels))
    return frames


def curves_from_predictions(
    predictions: pd.DataFrame, classes: List[str]
) -> Dict[str, pd.DataFrame]:
    """Rebuild pooled curves from a ``predictions.csv`` frame."""
    columns = [c for c in predictions.columns if c.startswith("p_")]
    if not columns:
        raise InputValidationError("Predictions have no probability columns")
    return curve_frames(
        predictions[columns].to_numpy(dtype=np.float64),
        predictions["target"].to_numpy(dtype=np.int64),
        [AcuityLabel.parse(name) for name in classes],
    )


def write_curves(frames: Dict[str, pd.DataFrame], out_dir: Path) -> List[Path]:
    paths = []
    for name in sorted(frames):
        paths.append(write_csv(frames[name], Path(out_dir) / f"{name}.csv"))
    return paths


def summary_lines(report: EvaluationReport) -> List[str]:
    """Human-readable lines for the console, AUROC first."""
    lines = [f"{report.model} / {report.head} on {report.task} ({len(report.folds)} folds)"]
    for class_name, metrics in report.metrics.items():
        parts = []
        for metric, estimate in metrics.items():
            if estimate is None:
                parts.append(f"{metric}=n/a")
            else:
                parts.append(
                    f"{metric}={estimate.point:.3f} [{estimate.ci_low:.3f}, {estimate.ci_high:.3f}]"
                )
        lines.append(f"  {class_name:<9} " + " ".join(parts))
    return lines


def mean_point(report: EvaluationReport, metric: str = "auroc") -> float:
    estimate = report.metrics.get("mean", {}).get(metric)
    if estimate is None:
        raise UndefinedMetricError(f"mean {metric} is undefined in this report")
    return estimate.point
